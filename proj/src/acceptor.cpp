#include "matchpax/acceptor.hpp"

#include "matchpax/bytes.hpp"

namespace matchpax {

namespace {
constexpr char kRecPromise = 'P';
constexpr char kRecVote = 'V';
constexpr char kRecHint = 'H';
constexpr char kRecAny = 'A';
}  // namespace

AcceptorNode::AcceptorNode(NodeId id, std::shared_ptr<Journal> journal, AcceptorOptions opts)
    : Node(std::move(id)), journal_(std::move(journal)), opts_(opts) {
    if (!journal_) journal_ = std::make_shared<MemJournal>();
}

void AcceptorNode::on_start(Context& ctx) {
    if (!journal_) return;
    for (const auto& rec : journal_->replay()) {
        ByteReader r(rec);
        switch (r.u8()) {
            case kRecPromise: promised_ = r.round(); break;
            case kRecVote: {
                Slot s = r.i64();
                Round vr = r.round();
                Value vv = r.value();
                votes_[s] = {vr, vv};
                if (vr > promised_) promised_ = vr;
                break;
            }
            case kRecHint: hinted_upto_ = std::max(hinted_upto_, r.i64()); break;
            case kRecAny:
                any_round_ = r.round();
                any_owner_ = r.str();
                break;
            default: ctx.panic("acceptor journal: unknown record"); return;
        }
    }
}

void AcceptorNode::record_promise(const Round& r) {
    promised_ = r;
    if (!journal_ || !opts_.journal_enabled) return;
    ByteWriter w;
    w.u8(kRecPromise);
    w.round(r);
    journal_->append(w.out);
}

void AcceptorNode::record_vote(Slot s, const Round& r, const Value& v) {
    votes_[s] = {r, v};
    if (!journal_ || !opts_.journal_enabled) return;
    ByteWriter w;
    w.u8(kRecVote);
    w.i64(s);
    w.round(r);
    w.value(v);
    journal_->append(w.out);
}

void AcceptorNode::record_hint(Slot upto) {
    if (upto <= hinted_upto_) return;
    hinted_upto_ = upto;
    if (!journal_ || !opts_.journal_enabled) return;
    ByteWriter w;
    w.u8(kRecHint);
    w.i64(upto);
    journal_->append(w.out);
}

void AcceptorNode::record_any(const Round& r, const NodeId& owner) {
    any_round_ = r;
    any_owner_ = owner;
    if (!journal_ || !opts_.journal_enabled) return;
    ByteWriter w;
    w.u8(kRecAny);
    w.round(r);
    w.str(owner);
    journal_->append(w.out);
}

void AcceptorNode::handle_phase1a(const NodeId& from, const Phase1A& m, Context& ctx) {
    if (!(m.round > promised_) && !opts_.unsafe_accept_lower_rounds) {
        ctx.send(from, Nack{promised_});
        return;
    }
    if (m.round > promised_) record_promise(m.round);
    journal_->sync();
    Phase1B reply;
    reply.round = m.round;
    for (auto it = votes_.lower_bound(m.first_slot); it != votes_.end(); ++it) {
        reply.votes[it->first] =
            Phase1bVote{it->second.first, it->second.second, it->first <= hinted_upto_};
    }
    // Already-chosen slots without a local vote still get flagged so a new
    // leader fetches them from the replicas instead of re-proposing.
    for (Slot s = m.first_slot; s <= hinted_upto_; ++s) {
        if (!reply.votes.count(s)) reply.votes[s] = Phase1bVote{Round::bottom(), Value::no_op(), true};
    }
    ctx.send(from, std::move(reply));
}

void AcceptorNode::handle_phase2a(const NodeId& from, const Phase2A& m, Context& ctx) {
    if (m.round < promised_ && !opts_.unsafe_accept_lower_rounds) {
        ctx.send(from, Nack{promised_});
        return;
    }
    if (m.round > promised_) record_promise(m.round);
    if (m.any) {
        // Fast path authorization: vote for the first client value seen in
        // this round, when it arrives.
        record_any(m.round, from);
        journal_->sync();
        return;
    }
    record_vote(m.slot, m.round, m.value);
    journal_->sync();
    ctx.observe_vote(m.slot, m.round, m.value);
    ctx.send(from, Phase2B{m.round, m.slot, m.value});
}

void AcceptorNode::handle_client(const ClientRequest& m, Context& ctx) {
    // Only meaningful after a Phase2A "any" authorization (Fast Paxos).
    if (any_round_.is_bottom() || any_round_ != promised_) return;
    auto it = votes_.find(0);
    if (it != votes_.end() && it->second.first >= any_round_) return;  // one vote per round
    Value v = Value::command(m.payload);
    record_vote(0, any_round_, v);
    journal_->sync();
    ctx.observe_vote(0, any_round_, v);
    ctx.send(any_owner_, Phase2B{any_round_, 0, v});
}

void AcceptorNode::handle_hint(const NodeId& from, const ChosenHint& m, Context& ctx) {
    record_hint(m.upto);
    journal_->sync();
    ctx.send(from, ChosenHintAck{m.round, m.upto});
}

void AcceptorNode::on_message(const Envelope& env, Context& ctx) {
    if (const auto* p1 = std::get_if<Phase1A>(&env.msg)) {
        handle_phase1a(env.from, *p1, ctx);
    } else if (const auto* p2 = std::get_if<Phase2A>(&env.msg)) {
        handle_phase2a(env.from, *p2, ctx);
    } else if (const auto* cr = std::get_if<ClientRequest>(&env.msg)) {
        handle_client(*cr, ctx);
    } else if (const auto* h = std::get_if<ChosenHint>(&env.msg)) {
        handle_hint(env.from, *h, ctx);
    } else if (std::get_if<StateHashRequest>(&env.msg)) {
        ctx.send(env.from, StateHashReply{state_hash()});
    }
}

std::uint64_t AcceptorNode::state_hash() const {
    Hasher h;
    h.round(promised_);
    h.u64(votes_.size());
    for (const auto& [s, rv] : votes_) {
        h.i64(s);
        h.round(rv.first);
        h.value(rv.second);
    }
    h.i64(hinted_upto_);
    h.round(any_round_);
    h.str(any_owner_);
    return h.h;
}

}  // namespace matchpax
