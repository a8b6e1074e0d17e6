#include "matchpax/matchmaker.hpp"

#include "matchpax/bytes.hpp"

namespace matchpax {

namespace {
constexpr char kRecAccept = 'M';     // (round, config) inserted into L
constexpr char kRecGarbage = 'G';    // watermark raised, prefix deleted
constexpr char kRecStop = 'S';
constexpr char kRecBootstrap = 'B';  // adopted initial state
constexpr char kRecActivate = 'T';
constexpr char kRecReconfPromise = 'p';
constexpr char kRecReconfVote = 'v';
}  // namespace

MatchmakerNode::MatchmakerNode(NodeId id, std::shared_ptr<Journal> journal, MatchmakerOptions opts)
    : Node(std::move(id)), journal_(std::move(journal)), opts_(opts) {
    if (!journal_) journal_ = std::make_shared<MemJournal>();
    active_ = opts_.starts_active;
}

void MatchmakerNode::journal_append(const std::string& rec) {
    if (opts_.journal_enabled) {
        journal_->append(rec);
        journal_->sync();
    }
}

void MatchmakerNode::on_start(Context& ctx) {
    for (const auto& rec : journal_->replay()) {
        ByteReader r(rec);
        switch (r.u8()) {
            case kRecAccept: {
                Round round = r.round();
                Configuration c = r.config();
                log_[round] = std::move(c);
                break;
            }
            case kRecGarbage: {
                Round upto = r.round();
                log_.erase(log_.begin(), log_.lower_bound(upto));
                if (upto > watermark_) watermark_ = upto;
                break;
            }
            case kRecStop: stopped_ = true; break;
            case kRecBootstrap: {
                bootstrap_nonce_ = r.u64();
                ConfigHistory h = r.history();
                log_.clear();
                for (auto& [round, c] : h) log_[round] = std::move(c);
                watermark_ = r.round();
                bootstrapped_ = true;
                break;
            }
            case kRecActivate: active_ = true; break;
            case kRecReconfPromise: reconf_promised_ = r.round(); break;
            case kRecReconfVote:
                reconf_vr_ = r.round();
                reconf_vv_ = r.ids();
                if (reconf_vr_ > reconf_promised_) reconf_promised_ = reconf_vr_;
                break;
            default: ctx.panic("matchmaker journal: unknown record"); return;
        }
    }
}

ConfigHistory MatchmakerNode::snapshot_log() const {
    ConfigHistory h;
    h.reserve(log_.size());
    for (const auto& [round, c] : log_) h.emplace_back(round, c);
    return h;
}

Round MatchmakerNode::highest_logged() const {
    Round hi = watermark_;
    if (!log_.empty() && log_.rbegin()->first > hi) hi = log_.rbegin()->first;
    return hi;
}

void MatchmakerNode::handle_match_a(const NodeId& from, const MatchA& m, Context& ctx) {
    if (stopped_ || !active_) return;  // caller retries against the new matchmakers
    bool has_geq = !log_.empty() && log_.rbegin()->first >= m.round;
    bool gc_refused = !watermark_.is_bottom() && m.round < watermark_;
    if ((gc_refused || has_geq) && !opts_.unsafe_non_monotone) {
        ctx.send(from, Nack{highest_logged()});
        return;
    }
    ConfigHistory history = snapshot_log();
    // Only rounds below the request belong in the history; with the
    // monotonicity guard in place the whole log qualifies.
    if (opts_.unsafe_non_monotone) {
        ConfigHistory below;
        for (auto& e : history)
            if (e.first < m.round) below.push_back(std::move(e));
        history = std::move(below);
    }
    log_[m.round] = m.config;
    ByteWriter w;
    w.u8(kRecAccept);
    w.round(m.round);
    w.config(m.config);
    journal_append(w.out);
    ctx.observe_mm_accept(m.round, m.config);
    ctx.observe_matchb(m.round, watermark_, history);
    ctx.send(from, MatchB{m.round, watermark_, std::move(history)});
}

void MatchmakerNode::handle_garbage_a(const NodeId& from, const GarbageA& m, Context& ctx) {
    if (stopped_ || !active_) return;
    if (watermark_.is_bottom() || m.round > watermark_) {
        log_.erase(log_.begin(), log_.lower_bound(m.round));
        watermark_ = m.round;
        ByteWriter w;
        w.u8(kRecGarbage);
        w.round(m.round);
        journal_append(w.out);
    }
    ctx.observe_garbage_ack(m.round);
    ctx.send(from, GarbageB{m.round});
}

void MatchmakerNode::handle_stop_a(const NodeId& from, Context& ctx) {
    if (!stopped_) {
        stopped_ = true;
        ByteWriter w;
        w.u8(kRecStop);
        journal_append(w.out);
    }
    // Repeated StopA re-sends the same frozen state.
    ctx.send(from, StopB{snapshot_log(), watermark_});
}

void MatchmakerNode::handle_bootstrap(const NodeId& from, const Bootstrap& m, Context& ctx) {
    if (active_) {
        // Already serving: state is at least as fresh as any merge, so a
        // late or racing driver is simply unblocked.
        ctx.send(from, BootstrapAck{m.nonce});
        return;
    }
    // Until activation, the latest bootstrap wins; racing drivers may seed
    // overlapping candidate sets and only the chosen one will be activated.
    log_.clear();
    for (const auto& [round, c] : m.log) log_[round] = c;
    watermark_ = m.gc_watermark;
    bootstrap_nonce_ = m.nonce;
    bootstrapped_ = true;
    ByteWriter w;
    w.u8(kRecBootstrap);
    w.u64(m.nonce);
    w.history(m.log);
    w.round(m.gc_watermark);
    journal_append(w.out);
    for (const auto& [round, c] : log_) ctx.observe_mm_accept(round, c);
    ctx.send(from, BootstrapAck{m.nonce});
}

void MatchmakerNode::handle_activate(const NodeId& from, const Activate& m, Context& ctx) {
    if (!active_) {
        if (!bootstrapped_ || m.nonce != bootstrap_nonce_) return;
        active_ = true;
        ByteWriter w;
        w.u8(kRecActivate);
        journal_append(w.out);
    }
    ctx.send(from, ActivateAck{m.nonce});
}

void MatchmakerNode::handle_reconf_p1(const NodeId& from, const ReconfPhase1A& m, Context& ctx) {
    if (!(m.round > reconf_promised_)) {
        ctx.send(from, Nack{reconf_promised_});
        return;
    }
    reconf_promised_ = m.round;
    ByteWriter w;
    w.u8(kRecReconfPromise);
    w.round(m.round);
    journal_append(w.out);
    ctx.send(from, ReconfPhase1B{m.round, reconf_vr_, reconf_vv_});
}

void MatchmakerNode::handle_reconf_p2(const NodeId& from, const ReconfPhase2A& m, Context& ctx) {
    if (m.round < reconf_promised_) {
        ctx.send(from, Nack{reconf_promised_});
        return;
    }
    reconf_promised_ = m.round;
    reconf_vr_ = m.round;
    reconf_vv_ = m.value;
    ByteWriter w;
    w.u8(kRecReconfVote);
    w.round(m.round);
    w.ids(m.value);
    journal_append(w.out);
    ctx.observe_reconf_vote(m.round, m.value);
    ctx.send(from, ReconfPhase2B{m.round});
}

void MatchmakerNode::on_message(const Envelope& env, Context& ctx) {
    if (const auto* ma = std::get_if<MatchA>(&env.msg)) {
        handle_match_a(env.from, *ma, ctx);
    } else if (const auto* ga = std::get_if<GarbageA>(&env.msg)) {
        handle_garbage_a(env.from, *ga, ctx);
    } else if (std::get_if<StopA>(&env.msg)) {
        handle_stop_a(env.from, ctx);
    } else if (const auto* b = std::get_if<Bootstrap>(&env.msg)) {
        handle_bootstrap(env.from, *b, ctx);
    } else if (const auto* a = std::get_if<Activate>(&env.msg)) {
        handle_activate(env.from, *a, ctx);
    } else if (const auto* r1 = std::get_if<ReconfPhase1A>(&env.msg)) {
        handle_reconf_p1(env.from, *r1, ctx);
    } else if (const auto* r2 = std::get_if<ReconfPhase2A>(&env.msg)) {
        handle_reconf_p2(env.from, *r2, ctx);
    } else if (std::get_if<StateHashRequest>(&env.msg)) {
        ctx.send(env.from, StateHashReply{state_hash()});
    }
}

std::uint64_t MatchmakerNode::state_hash() const {
    Hasher h;
    h.u64(log_.size());
    for (const auto& [round, c] : log_) {
        h.round(round);
        c.digest(h);
    }
    h.round(watermark_);
    h.u64(stopped_ ? 1 : 0);
    h.u64(active_ ? 1 : 0);
    h.round(reconf_promised_);
    h.round(reconf_vr_);
    for (const auto& n : reconf_vv_) h.str(n);
    return h.h;
}

}  // namespace matchpax
