#include "matchpax/sim/oracle.hpp"

#include <algorithm>
#include <set>

namespace matchpax {

namespace {

std::string slot_round(Slot s, const Round& r) {
    return "slot " + std::to_string(s) + " round " + r.str();
}

}  // namespace

std::vector<Violation> check_safety(const OracleLedger& ledger) {
    std::vector<Violation> out;
    const std::size_t quorum = static_cast<std::size_t>(ledger.f + 1);

    // Pass 1: configurations per round, panics, garbage ack ordering.
    std::map<Round, const Configuration*> round_config;
    std::map<Round, std::uint64_t> round_digest;
    std::map<Round, std::set<NodeId>> garbage_acks;
    std::map<Round, std::size_t> garbage_quorum_idx;  // ledger index of the (f+1)-th ack
    std::map<Round, std::size_t> first_matchb_idx;
    for (std::size_t i = 0; i < ledger.events.size(); ++i) {
        const auto& ev = ledger.events[i];
        if (const auto* ma = std::get_if<MmAcceptRec>(&ev)) {
            auto [it, fresh] = round_digest.emplace(ma->round, ma->config_digest);
            if (fresh) {
                round_config[ma->round] = &ma->config;
            } else if (it->second != ma->config_digest) {
                out.push_back({"matchmaker-config-conflict",
                               "two configurations logged for round " + ma->round.str()});
            }
        } else if (const auto* g = std::get_if<GarbageRec>(&ev)) {
            auto& acks = garbage_acks[g->round];
            acks.insert(g->mm);
            if (acks.size() == quorum) garbage_quorum_idx.emplace(g->round, i);
        } else if (const auto* mb = std::get_if<MatchbRec>(&ev)) {
            first_matchb_idx.emplace(mb->round, i);
        } else if (const auto* p = std::get_if<PanicRec>(&ev)) {
            out.push_back({"node-panic", p->node + ": " + p->why});
        }
    }

    // Pass 2: vote table and chosen-value extraction.
    // votes[(slot, round)] = acceptor -> value
    std::map<std::pair<Slot, Round>, std::map<NodeId, Value>> votes;
    for (const auto& ev : ledger.events) {
        if (const auto* v = std::get_if<VoteRec>(&ev)) {
            auto& per = votes[{v->slot, v->round}];
            auto [it, fresh] = per.emplace(v->acceptor, v->value);
            if (!fresh && !(it->second == v->value)) it->second = v->value;  // re-vote, same round
        }
    }
    // chosen[slot] = set of (round, value)
    std::map<Slot, std::vector<std::pair<Round, Value>>> chosen;
    for (const auto& [key, per] : votes) {
        const auto& [slot, round] = key;
        auto cit = round_config.find(round);
        if (cit == round_config.end()) {
            out.push_back({"vote-in-unregistered-round", slot_round(slot, round)});
            continue;
        }
        for (const auto& q : cit->second->phase2_quorums) {
            const Value* uval = nullptr;
            bool full = true;
            for (const auto& a : q) {
                auto vit = per.find(a);
                if (vit == per.end()) {
                    full = false;
                    break;
                }
                if (uval && !(*uval == vit->second)) {
                    full = false;
                    break;
                }
                uval = &vit->second;
            }
            if (full && uval) {
                auto& cs = chosen[slot];
                bool seen = false;
                for (auto& [r, v] : cs)
                    if (r == round && v == *uval) seen = true;
                if (!seen) cs.emplace_back(round, *uval);
            }
        }
    }
    for (const auto& [slot, rv] : chosen) {
        for (std::size_t a = 0; a < rv.size(); ++a)
            for (std::size_t b = a + 1; b < rv.size(); ++b)
                if (!(rv[a].second == rv[b].second))
                    out.push_back({"two-values-chosen",
                                   "slot " + std::to_string(slot) + ": " + rv[a].first.str() +
                                       " vs " + rv[b].first.str()});
    }

    // Pass 3: proposer statement P(i): a Phase2A in round i implies nothing
    // contrary was or will be chosen below i.
    for (const auto& ev : ledger.events) {
        const auto* p = std::get_if<Phase2aRec>(&ev);
        if (!p || p->any) continue;
        auto cit = chosen.find(p->slot);
        if (cit == chosen.end()) continue;
        for (const auto& [r, v] : cit->second)
            if (r < p->round && !(v == p->value))
                out.push_back({"phase2a-contradicts-chosen",
                               slot_round(p->slot, p->round) + " proposed over " + r.str()});
    }

    // Pass 4: leader chosen claims and replica executions agree with the
    // vote-derived truth, and replicas never diverge per slot.
    std::map<Slot, Value> executed_value;
    for (const auto& ev : ledger.events) {
        if (const auto* c = std::get_if<ChosenRec>(&ev)) {
            bool backed = false;
            auto cit = chosen.find(c->slot);
            if (cit != chosen.end())
                for (const auto& [r, v] : cit->second)
                    if (v == c->value) backed = true;
            if (!backed)
                out.push_back({"chosen-claim-unbacked", slot_round(c->slot, c->round)});
        } else if (const auto* e = std::get_if<ExecRec>(&ev)) {
            auto [it, fresh] = executed_value.emplace(e->slot, e->value);
            if (!fresh && !(it->second == e->value))
                out.push_back({"replica-execution-divergence", "slot " + std::to_string(e->slot)});
            auto cit = chosen.find(e->slot);
            bool backed = false;
            if (cit != chosen.end())
                for (const auto& [r, v] : cit->second)
                    if (v == e->value) backed = true;
            if (!backed)
                out.push_back({"executed-unchosen-value", "slot " + std::to_string(e->slot)});
        }
    }

    // Pass 5: matchmaker log discipline. Per matchmaker, MatchB emissions
    // carry strictly increasing rounds and exactly the live log below the
    // request; across the system, a round garbage-collected by f+1
    // matchmakers before a matchmaking phase's first reply never resurfaces
    // in that phase's pruned history.
    std::map<NodeId, std::map<Round, bool>> mm_log;  // round -> live
    std::map<NodeId, Round> mm_last_emit;
    std::map<NodeId, Round> mm_watermark;
    for (const auto& ev : ledger.events) {
        if (const auto* ma = std::get_if<MmAcceptRec>(&ev)) {
            mm_log[ma->mm][ma->round] = true;
        } else if (const auto* g = std::get_if<GarbageRec>(&ev)) {
            auto& log = mm_log[g->mm];
            for (auto it = log.begin(); it != log.end() && it->first < g->round;)
                it = log.erase(it);
            auto& w = mm_watermark[g->mm];
            if (g->round > w) w = g->round;
        } else if (const auto* mb = std::get_if<MatchbRec>(&ev)) {
            auto last = mm_last_emit.find(mb->mm);
            if (last != mm_last_emit.end() && !(last->second < mb->round))
                out.push_back({"matchmaker-nonmonotone", mb->mm + " emitted " + mb->round.str() +
                                                             " after " + last->second.str()});
            mm_last_emit[mb->mm] = mb->round;
            // History completeness: exactly the live entries below the round
            // at processing time (the accept lands after the reply record).
            std::set<Round> want;
            for (const auto& [r, live] : mm_log[mb->mm])
                if (r < mb->round) want.insert(r);
            std::set<Round> got(mb->hist_rounds.begin(), mb->hist_rounds.end());
            if (got != want)
                out.push_back({"matchb-history-incomplete", mb->mm + " at " + mb->round.str()});
        }
    }
    for (const auto& ev : ledger.events) {
        if (const auto* h = std::get_if<HistoryRec>(&ev)) {
            auto fit = first_matchb_idx.find(h->round);
            if (fit == first_matchb_idx.end()) continue;
            for (const auto& [gr, gidx] : garbage_quorum_idx) {
                if (gidx >= fit->second) continue;
                for (const auto& hr : h->hist_rounds)
                    if (hr < gr)
                        out.push_back({"garbage-resurfaced",
                                       "round " + hr.str() + " below collected " + gr.str()});
            }
        }
    }

    // Pass 6: at most one matchmaker set chosen per reconfiguration
    // instance. Instances are tied together by their voter generation: any
    // two chosen sets whose voter sets overlap must be equal.
    struct ReconfChoice {
        std::set<NodeId> voters;
        std::vector<NodeId> value;
    };
    std::map<Round, std::map<std::string, std::set<NodeId>>> rvotes;
    for (const auto& ev : ledger.events)
        if (const auto* rv = std::get_if<ReconfVoteRec>(&ev)) {
            std::string key;
            for (const auto& n : rv->value) key += n + ",";
            rvotes[rv->round][key].insert(rv->mm);
        }
    std::vector<ReconfChoice> choices;
    for (const auto& [round, per_value] : rvotes)
        for (const auto& [key, voters] : per_value)
            if (voters.size() >= quorum) choices.push_back({voters, {key}});
    for (std::size_t a = 0; a < choices.size(); ++a)
        for (std::size_t b = a + 1; b < choices.size(); ++b) {
            bool overlap = false;
            for (const auto& v : choices[a].voters)
                if (choices[b].voters.count(v)) overlap = true;
            if (overlap && choices[a].value != choices[b].value)
                out.push_back(
                    {"two-matchmaker-sets-chosen", choices[a].value[0] + " vs " + choices[b].value[0]});
        }

    return out;
}

}  // namespace matchpax
