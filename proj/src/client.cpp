#include "matchpax/client.hpp"

#include <algorithm>

namespace matchpax {

namespace {
constexpr std::uint64_t kTimerStart = 1;
constexpr std::uint64_t kTimerTick = 2;
constexpr std::uint64_t kTimerMetronome = 3;
}  // namespace

ClientNode::ClientNode(NodeId id, ClientOptions opts)
    : Node(std::move(id)), opts_(std::move(opts)) {
    if (!opts_.leader_hint.empty()) {
        auto it = std::find(opts_.proposers.begin(), opts_.proposers.end(), opts_.leader_hint);
        if (it != opts_.proposers.end()) hint_ = static_cast<std::size_t>(it - opts_.proposers.begin());
    }
}

void ClientNode::on_start(Context& ctx) {
    ctx.set_timer(opts_.start_at, kTimerStart);
}

void ClientNode::send_request(Context& ctx, std::int64_t seq) {
    if (opts_.proposers.empty()) return;
    const NodeId& to = opts_.proposers[hint_ % opts_.proposers.size()];
    ctx.send(to, ClientRequest{opts_.op, id_, seq});
    last_activity_ = ctx.now();
}

void ClientNode::next_request(Context& ctx) {
    if (stopped_) return;
    if (opts_.max_requests > 0 && next_seq_ >= opts_.max_requests) {
        stopped_ = true;
        return;
    }
    ++next_seq_;
    inflight_[next_seq_] = ctx.now();
    send_request(ctx, next_seq_);
}

void ClientNode::on_message(const Envelope& env, Context& ctx) {
    if (const auto* rep = std::get_if<ClientReply>(&env.msg)) {
        auto it = inflight_.find(rep->seq);
        if (it == inflight_.end()) return;  // duplicate reply
        samples_.push_back({rep->seq, it->second, ctx.now()});
        inflight_.erase(it);
        if (opts_.metronome == 0) next_request(ctx);
    } else if (const auto* nk = std::get_if<Nack>(&env.msg)) {
        // Redirect toward the round owner when it is a known proposer.
        // Resend only when the hint actually changes; otherwise the timeout
        // path retries (avoids nack ping-pong with a deposed node).
        auto it = std::find(opts_.proposers.begin(), opts_.proposers.end(), nk->round.owner);
        if (it != opts_.proposers.end()) {
            auto nh = static_cast<std::size_t>(it - opts_.proposers.begin());
            if (nh != hint_ % opts_.proposers.size()) {
                hint_ = nh;
                for (const auto& [seq, t0] : inflight_) send_request(ctx, seq);
            }
        }
    } else if (std::get_if<StateHashRequest>(&env.msg)) {
        ctx.send(env.from, StateHashReply{state_hash()});
    }
}

void ClientNode::on_timer(std::uint64_t tag, Context& ctx) {
    if (tag == kTimerStart) {
        if (opts_.metronome > 0) {
            next_request(ctx);
            ctx.set_timer(opts_.metronome, kTimerMetronome);
        } else {
            next_request(ctx);
        }
        ctx.set_timer(opts_.timeout, kTimerTick);
        return;
    }
    if (tag == kTimerMetronome) {
        next_request(ctx);
        ctx.set_timer(opts_.metronome, kTimerMetronome);
        return;
    }
    if (tag == kTimerTick) {
        if (!inflight_.empty() && ctx.now() - last_activity_ >= opts_.timeout) {
            ++hint_;  // rotate: the believed leader is not answering
            for (const auto& [seq, t0] : inflight_) send_request(ctx, seq);
        }
        ctx.set_timer(opts_.timeout, kTimerTick);
    }
}

std::uint64_t ClientNode::state_hash() const {
    Hasher h;
    h.i64(next_seq_);
    h.u64(samples_.size());
    h.u64(inflight_.size());
    return h.h;
}

}  // namespace matchpax
