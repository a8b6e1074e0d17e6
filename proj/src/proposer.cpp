#include "matchpax/proposer.hpp"

#include <algorithm>
#include <stdexcept>

namespace matchpax {

namespace {
constexpr std::uint64_t kTimerRetry = 1;
constexpr std::uint64_t kTimerResend = 2;
}  // namespace

ProposerNode::ProposerNode(NodeId id, ProposerOptions opts)
    : Node(std::move(id)), opts_(std::move(opts)), rng_(opts_.rng_seed) {}

void ProposerNode::begin_round(std::optional<Value> value, Configuration config, Context& ctx) {
    if (phase_ != Phase::idle && phase_ != Phase::chosen)
        throw std::logic_error("begin_round: proposer is mid-round");
    round_ = Round::of(next_counter_++, id_, 0);
    value_ = std::move(value);
    config_ = std::move(config);
    fixed_mode_ = false;
    facts_carried_ = false;
    start_matchmaking(ctx);
}

void ProposerNode::begin_fixed(Round round, Configuration config, Value value, Context& ctx) {
    round_ = std::move(round);
    value_ = std::move(value);
    config_ = std::move(config);
    fixed_mode_ = true;
    facts_carried_ = false;
    history_.clear();
    history_.emplace_back(Round::bottom(), config_);
    enter_phase1(ctx);
}

void ProposerNode::advance_bypassed(Configuration config, Context& ctx) {
    if (!(phase1_fact_round_ == round_) || round_.owner != id_)
        throw std::logic_error("advance_bypassed: no Phase-1 facts for the current round");
    round_ = round_successor(round_);
    config_ = std::move(config);
    facts_carried_ = true;  // k_/vset_ remain valid for the new round
    start_matchmaking(ctx);
}

void ProposerNode::start_matchmaking(Context& ctx) {
    phase_ = Phase::matchmaking;
    matchb_.clear();
    history_.clear();
    p1_responders_.clear();
    p2_votes_.clear();
    gc_issued_ = gc_acked_ = false;
    garbageb_.clear();
    hint_acks_.clear();
    proposed_ = any_proposed_ = false;
    phase1_complete_ = false;
    if (!facts_carried_) {
        k_ = Round::bottom();
        vset_.clear();
    }
    config_.label = round_.str();  // configuration labels come from the proposing round
    for (const auto& m : opts_.matchmakers) ctx.send(m, MatchA{round_, config_});
    ctx.set_timer(opts_.resend_interval, kTimerResend);
}

void ProposerNode::enter_phase1(Context& ctx) {
    phase_ = Phase::phase1;
    p1_responders_.clear();
    if (!facts_carried_) {
        k_ = Round::bottom();
        vset_.clear();
    }
    phase1_complete_ = false;
    if (history_.empty()) {
        // Nothing to intersect: Phase 1 is vacuous and k = -1.
        phase1_complete_ = true;
        phase1_fact_round_ = round_;
        if (opts_.unsafe_gc_without_guards) maybe_issue_gc(ctx);
        enter_phase2(ctx);
        return;
    }
    std::set<NodeId> targets;
    for (const auto& [r, c] : history_)
        for (const auto& a : c.acceptors) targets.insert(a);
    for (const auto& a : targets) ctx.send(a, Phase1A{round_, 0});
    ctx.set_timer(opts_.resend_interval, kTimerResend);
}

void ProposerNode::phase1_try_complete(Context& ctx) {
    std::vector<NodeId> responders(p1_responders_.begin(), p1_responders_.end());
    for (const auto& [r, c] : history_) {
        if (opts_.round_pruning && !k_.is_bottom() && r < k_) continue;
        if (!quorum_covered(c.phase1_quorums, responders)) return;
    }
    phase1_complete_ = true;
    phase1_fact_round_ = round_;
    enter_phase2(ctx);
}

void ProposerNode::enter_phase2(Context& ctx) {
    phase_ = Phase::phase2;
    if (opts_.fast) {
        // TR Fast Paxos proposer: k = -1 or conflicting vote values mean any
        // client value may win; a single surviving value must be re-proposed.
        if (k_.is_bottom() || vset_.size() > 1) {
            any_proposed_ = true;
            proposed_ = true;
            ctx.observe_phase2a(0, round_, Value::no_op(), true);
            for (const auto& a : config_.acceptors) ctx.send(a, Phase2A{round_, 0, Value::no_op(), true});
        } else if (vset_.size() == 1) {
            value_ = *vset_.begin();
            send_phase2a(ctx);
        }
        if (gc_scenario() != 0 && opts_.auto_gc) maybe_issue_gc(ctx);
        return;
    }
    if (!k_.is_bottom()) value_ = *vset_.begin();
    if (value_.has_value()) {
        send_phase2a(ctx);
    }
    // Proactive matchmaking may leave no value yet; Phase 2 starts when the
    // client value arrives. Scenario 2 GC is already permitted here.
    if (gc_scenario() != 0 && opts_.auto_gc) maybe_issue_gc(ctx);
}

void ProposerNode::send_phase2a(Context& ctx) {
    proposed_ = true;
    ctx.observe_phase2a(0, round_, *value_, false);
    for (const auto& a : config_.acceptors) ctx.send(a, Phase2A{round_, 0, *value_, false});
    ctx.set_timer(opts_.resend_interval, kTimerResend);
}

void ProposerNode::try_chosen(Context& ctx) {
    // A value is chosen once some Phase 2 quorum voted for it unanimously.
    for (const auto& q : config_.phase2_quorums) {
        const Value* v = nullptr;
        bool all = true;
        for (const auto& a : q) {
            auto it = p2_votes_.find(a);
            if (it == p2_votes_.end()) {
                all = false;
                break;
            }
            if (v && !(*v == it->second)) {
                all = false;
                break;
            }
            v = &it->second;
        }
        if (all && v) {
            phase_ = Phase::chosen;
            chosen_value_ = *v;
            ctx.observe_chosen(0, round_, *v);
            if (!client_.empty()) ctx.send(client_, ClientReply{v->payload, client_, client_seq_});
            if (opts_.auto_gc) maybe_issue_gc(ctx);
            return;
        }
    }
}

int ProposerNode::gc_scenario() const {
    if (phase_ == Phase::chosen) return 1;
    if (phase1_complete_ && k_.is_bottom()) return 2;
    if (chosen_replicated_) {
        std::vector<NodeId> acks(hint_acks_.begin(), hint_acks_.end());
        if (quorum_covered(config_.phase2_quorums, acks)) return 3;
    }
    return 0;
}

GcIssue ProposerNode::maybe_issue_gc(Context& ctx) {
    if (gc_scenario() == 0 && !opts_.unsafe_gc_without_guards) return GcIssue::no_scenario_error;
    if (!gc_issued_) {
        gc_issued_ = true;
        garbageb_.clear();
        for (const auto& m : opts_.matchmakers) ctx.send(m, GarbageA{round_});
    }
    return GcIssue::sent;
}

void ProposerNode::handle_nack(const Round& r, Context& ctx) {
    if (phase_ == Phase::idle || phase_ == Phase::chosen) return;
    if (r < round_) return;
    // Abandon this round; retry in a larger owned round after backoff.
    next_counter_ = std::max(next_counter_, r.counter + 1);
    phase_ = Phase::idle;
    ctx.set_timer(opts_.retry_delay + static_cast<Time>(rng_.below(16)), kTimerRetry);
}

void ProposerNode::on_timer(std::uint64_t tag, Context& ctx) {
    if (tag == kTimerRetry && phase_ == Phase::idle) {
        if (fixed_mode_) {
            begin_fixed(Round::of(next_counter_++, id_, 0), config_, *value_, ctx);
        } else {
            begin_round(value_, config_, ctx);
        }
        return;
    }
    if (tag != kTimerResend || phase_ == Phase::idle || phase_ == Phase::chosen) return;
    switch (phase_) {
        case Phase::matchmaking:
            for (const auto& m : opts_.matchmakers)
                if (!matchb_.count(m)) ctx.send(m, MatchA{round_, config_});
            break;
        case Phase::phase1:
            for (const auto& [r, c] : history_)
                for (const auto& a : c.acceptors)
                    if (!p1_responders_.count(a)) ctx.send(a, Phase1A{round_, 0});
            break;
        case Phase::phase2:
            if (proposed_)
                for (const auto& a : config_.acceptors)
                    if (!p2_votes_.count(a))
                        ctx.send(a, Phase2A{round_, 0, any_proposed_ ? Value::no_op() : *value_,
                                            any_proposed_});
            break;
        default: break;
    }
    if (gc_issued_ && !gc_acked_)
        for (const auto& m : opts_.matchmakers)
            if (!garbageb_.count(m)) ctx.send(m, GarbageA{round_});
    ctx.set_timer(opts_.resend_interval, kTimerResend);
}

void ProposerNode::on_message(const Envelope& env, Context& ctx) {
    if (const auto* mb = std::get_if<MatchB>(&env.msg)) {
        if (phase_ != Phase::matchmaking || !mine(mb->round)) return;  // mismatched-round replies rejected
        matchb_[env.from] = *mb;
        if (matchb_.size() < static_cast<std::size_t>(opts_.f + 1)) return;
        // Union of f+1 histories, pruned below the largest returned watermark.
        Round max_w = Round::bottom();
        std::map<Round, Configuration> merged;
        for (const auto& [mm, reply] : matchb_) {
            if (reply.gc_watermark > max_w) max_w = reply.gc_watermark;
            for (const auto& [r, c] : reply.history) merged[r] = c;
        }
        history_.clear();
        for (auto& [r, c] : merged) {
            if (!max_w.is_bottom() && r < max_w) continue;
            history_.emplace_back(r, std::move(c));
        }
        ctx.observe_history(round_, history_);
        if (opts_.unsafe_gc_without_guards) maybe_issue_gc(ctx);
        if (facts_carried_) {
            // Phase 1 bypassing: the previous owned round established that
            // nothing contrary was or will be chosen below this round.
            phase1_complete_ = true;
            phase1_fact_round_ = round_;
            enter_phase2(ctx);
        } else {
            enter_phase1(ctx);
        }
    } else if (const auto* p1b = std::get_if<Phase1B>(&env.msg)) {
        if (phase_ != Phase::phase1 || !mine(p1b->round)) return;
        p1_responders_.insert(env.from);
        for (const auto& [slot, vote] : p1b->votes) {
            if (vote.vr > k_) {
                k_ = vote.vr;
                vset_.clear();
            }
            if (!vote.vr.is_bottom() && vote.vr == k_) vset_.insert(vote.vv);
        }
        phase1_try_complete(ctx);
    } else if (const auto* p2b = std::get_if<Phase2B>(&env.msg)) {
        if (phase_ != Phase::phase2 || !mine(p2b->round)) return;
        p2_votes_[env.from] = p2b->voted;  // duplicates collapse per sender
        try_chosen(ctx);
    } else if (const auto* gb = std::get_if<GarbageB>(&env.msg)) {
        if (!mine(gb->round)) return;
        garbageb_.insert(env.from);
        if (garbageb_.size() >= static_cast<std::size_t>(opts_.f + 1)) gc_acked_ = true;
    } else if (const auto* ha = std::get_if<ChosenHintAck>(&env.msg)) {
        if (mine(ha->round)) hint_acks_.insert(env.from);
    } else if (const auto* nk = std::get_if<Nack>(&env.msg)) {
        handle_nack(nk->round, ctx);
    } else if (const auto* cr = std::get_if<ClientRequest>(&env.msg)) {
        client_ = cr->client;
        client_seq_ = cr->seq;
        Value v = Value::command(cr->payload);
        if (phase_ == Phase::chosen) {
            ctx.send(client_, ClientReply{chosen_value_.payload, client_, client_seq_});
        } else if (phase_ == Phase::phase2 && !proposed_ && !opts_.fast) {
            value_ = std::move(v);
            send_phase2a(ctx);
        } else if (!value_.has_value()) {
            value_ = std::move(v);
        }
    } else if (std::get_if<StateHashRequest>(&env.msg)) {
        ctx.send(env.from, StateHashReply{state_hash()});
    }
}

std::uint64_t ProposerNode::state_hash() const {
    Hasher h;
    h.u64(static_cast<std::uint64_t>(phase_));
    h.round(round_);
    h.u64(value_.has_value());
    if (value_) h.value(*value_);
    h.round(k_);
    h.u64(proposed_);
    h.u64(static_cast<std::uint64_t>(p2_votes_.size()));
    h.value(chosen_value_);
    h.u64(gc_acked_);
    return h.h;
}

}  // namespace matchpax
