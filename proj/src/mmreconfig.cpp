#include "matchpax/mmreconfig.hpp"

#include <algorithm>
#include <stdexcept>

#include "matchpax/bytes.hpp"

namespace matchpax {

std::string encode_id_list(const std::vector<NodeId>& ids) {
    ByteWriter w;
    w.ids(ids);
    return std::move(w.out);
}

std::vector<NodeId> decode_id_list(const std::string& bytes) {
    ByteReader r(bytes);
    auto v = r.ids();
    if (r.fail) return {};
    return v;
}

MergeResult merge_stop_replies(const std::vector<StopB>& replies) {
    MergeResult out;
    out.merged_w = Round::bottom();
    for (const auto& sb : replies)
        if (sb.gc_watermark > out.merged_w) out.merged_w = sb.gc_watermark;
    for (const auto& sb : replies) {
        for (const auto& [r, c] : sb.log) {
            if (!out.merged_w.is_bottom() && r < out.merged_w) continue;
            auto [it, inserted] = out.merged_log.emplace(r, c);
            if (!inserted && !(it->second == c))
                throw std::runtime_error("merge_stop_replies: conflicting configurations at round " +
                                         r.str());
        }
    }
    return out;
}

namespace {
constexpr std::uint64_t kTimerResend = 1;
constexpr std::uint64_t kEmbeddedTagBase = 1u << 16;
}  // namespace

// Forwards the embedded single-decree proposer's sends, rewriting them onto
// the reconfiguration instance's wire tags.
class MmReconfigDriver::EmbeddedContext : public Context {
  public:
    EmbeddedContext(Context& outer) : outer_(outer) {}
    Time now() const override { return outer_.now(); }
    void send(const NodeId& to, Message m) override {
        if (const auto* p1 = std::get_if<Phase1A>(&m)) {
            outer_.send(to, ReconfPhase1A{p1->round});
        } else if (const auto* p2 = std::get_if<Phase2A>(&m)) {
            outer_.send(to, ReconfPhase2A{p2->round, decode_id_list(p2->value.payload)});
        }
        // The embedded instance has no client and never garbage collects.
    }
    void set_timer(Time delay, std::uint64_t tag) override {
        outer_.set_timer(delay, kEmbeddedTagBase + tag);
    }
    void panic(const std::string& why) override { outer_.panic(why); }

  private:
    Context& outer_;
};

MmReconfigDriver::MmReconfigDriver(NodeId id, DriverOptions opts)
    : Node(std::move(id)), opts_(std::move(opts)), rng_(opts_.rng_seed) {}

void MmReconfigDriver::on_start(Context& ctx) {
    ctx.set_timer(opts_.resend_interval, kTimerResend);
}

void MmReconfigDriver::start_reconfiguration(std::vector<NodeId> m_new, Context& ctx) {
    if (stage_ != Stage::idle && stage_ != Stage::done) return;  // one at a time
    std::sort(m_new.begin(), m_new.end());
    candidate_ = std::move(m_new);
    old_set_.clear();
    target_.clear();
    embedded_.reset();
    stage_ = Stage::stopping;
    stopb_.clear();
    bootstrap_acks_.clear();
    activate_acks_.clear();
    nonce_ = rng_.next();
    ctx.observe("mm_reconfig_start", encode_id_list(candidate_));
    for (const auto& m : opts_.matchmakers) ctx.send(m, StopA{});
    last_send_ = ctx.now();
}

void MmReconfigDriver::begin_bootstrap(Context& ctx) {
    stage_ = Stage::working;  // bootstrap and the embedded choice run concurrently
    std::vector<StopB> replies;
    replies.reserve(stopb_.size());
    for (const auto& [mm, sb] : stopb_) replies.push_back(sb);
    try {
        merge_ = merge_stop_replies(replies);
    } catch (const std::runtime_error& e) {
        ctx.panic(e.what());
        return;
    }
    ConfigHistory log;
    for (const auto& [r, c] : merge_.merged_log) log.emplace_back(r, c);
    for (const auto& m : candidate_) ctx.send(m, Bootstrap{nonce_, log, merge_.merged_w});
    last_send_ = ctx.now();
}

void MmReconfigDriver::begin_choice(Context& ctx) {
    // The old matchmakers double as Paxos acceptors; majority quorums.
    Configuration c = majority_configuration("mm-choice", opts_.matchmakers);
    ProposerOptions po;
    po.f = opts_.f;
    po.resend_interval = opts_.resend_interval;
    po.retry_delay = opts_.resend_interval / 2 + 1;
    po.rng_seed = rng_.next();
    embedded_ = std::make_unique<ProposerNode>(id_ + "/choice", po);
    EmbeddedContext ectx(ctx);
    embedded_->begin_fixed(Round::of(attempt_++, id_, 0), std::move(c),
                           Value::command(encode_id_list(candidate_)), ectx);
}

void MmReconfigDriver::feed_embedded(const Envelope& env, Context& ctx) {
    if (!embedded_) return;
    EmbeddedContext ectx(ctx);
    Envelope translated = env;
    if (const auto* p1b = std::get_if<ReconfPhase1B>(&env.msg)) {
        Phase1B b{p1b->round, {}};
        if (!p1b->vr.is_bottom())
            b.votes[0] = Phase1bVote{p1b->vr, Value::command(encode_id_list(p1b->vv)), false};
        translated.msg = std::move(b);
    } else if (const auto* p2b = std::get_if<ReconfPhase2B>(&env.msg)) {
        if (!embedded_->value().has_value()) return;
        translated.msg = Phase2B{p2b->round, 0, *embedded_->value()};
    } else if (!std::get_if<Nack>(&env.msg)) {
        return;
    }
    embedded_->on_message(translated, ectx);
    if (embedded_->chosen() && stage_ == Stage::working && target_.empty())
        on_chosen_set(decode_id_list(embedded_->chosen_value().payload), ctx);
}

void MmReconfigDriver::on_chosen_set(std::vector<NodeId> chosen, Context& ctx) {
    target_ = std::move(chosen);
    ctx.observe_activation(nonce_, target_);
    if (target_ != candidate_) {
        // Lost the race. Adopt the winner's set: re-bootstrap it with our
        // merge (overwritten only while inactive) and drive its activation.
        ctx.observe("mm_reconfig_lost", encode_id_list(target_));
        candidate_ = target_;
        bootstrap_acks_.clear();
        ConfigHistory log;
        for (const auto& [r, c] : merge_.merged_log) log.emplace_back(r, c);
        for (const auto& m : target_) ctx.send(m, Bootstrap{nonce_, log, merge_.merged_w});
        last_send_ = ctx.now();
        return;
    }
    maybe_activate(ctx);
}

void MmReconfigDriver::maybe_activate(Context& ctx) {
    if (stage_ != Stage::working || target_.empty()) return;
    if (!std::all_of(target_.begin(), target_.end(),
                     [&](const NodeId& m) { return bootstrap_acks_.count(m) > 0; }))
        return;
    begin_activation(ctx);
}

void MmReconfigDriver::begin_activation(Context& ctx) {
    stage_ = Stage::activating;
    activate_acks_.clear();
    for (const auto& m : target_) ctx.send(m, Activate{nonce_});
    last_send_ = ctx.now();
}

void MmReconfigDriver::finish(Context& ctx) {
    stage_ = Stage::done;
    old_set_ = opts_.matchmakers;
    opts_.matchmakers = target_;
    ++opts_.view_version;
    ctx.observe("mm_reconfig_done", encode_id_list(target_));
    for (const auto& p : opts_.proposers)
        ctx.send(p, ViewChange{opts_.view_version, target_});
}

void MmReconfigDriver::on_message(const Envelope& env, Context& ctx) {
    if (const auto* sb = std::get_if<StopB>(&env.msg)) {
        if (stage_ != Stage::stopping) return;
        stopb_[env.from] = *sb;
        if (stopb_.size() >= static_cast<std::size_t>(opts_.f + 1)) {
            begin_bootstrap(ctx);
            begin_choice(ctx);
        }
    } else if (const auto* ba = std::get_if<BootstrapAck>(&env.msg)) {
        if (ba->nonce != nonce_) return;
        bootstrap_acks_.insert(env.from);
        // Activation waits for both the chosen value and the full bootstrap
        // of the target set.
        maybe_activate(ctx);
    } else if (const auto* aa = std::get_if<ActivateAck>(&env.msg)) {
        if (aa->nonce != nonce_ || stage_ != Stage::activating) return;
        activate_acks_.insert(env.from);
        if (std::all_of(target_.begin(), target_.end(),
                        [&](const NodeId& m) { return activate_acks_.count(m) > 0; }))
            finish(ctx);
    } else if (const auto* cmd = std::get_if<MmReconfigureCmd>(&env.msg)) {
        start_reconfiguration(cmd->new_matchmakers, ctx);
    } else if (std::get_if<ReconfPhase1B>(&env.msg) || std::get_if<ReconfPhase2B>(&env.msg) ||
               std::get_if<Nack>(&env.msg)) {
        feed_embedded(env, ctx);
    } else if (std::get_if<StateHashRequest>(&env.msg)) {
        ctx.send(env.from, StateHashReply{state_hash()});
    }
}

void MmReconfigDriver::on_timer(std::uint64_t tag, Context& ctx) {
    if (tag >= kEmbeddedTagBase) {
        if (embedded_) {
            EmbeddedContext ectx(ctx);
            embedded_->on_timer(tag - kEmbeddedTagBase, ectx);
        }
        return;
    }
    if (tag != kTimerResend) return;
    Time now = ctx.now();
    if (now - last_send_ >= opts_.resend_interval) {
        switch (stage_) {
            case Stage::stopping:
                for (const auto& m : opts_.matchmakers)
                    if (!stopb_.count(m)) ctx.send(m, StopA{});
                last_send_ = now;
                break;
            case Stage::working: {
                ConfigHistory log;
                for (const auto& [r, c] : merge_.merged_log) log.emplace_back(r, c);
                for (const auto& m : candidate_)
                    if (!bootstrap_acks_.count(m)) ctx.send(m, Bootstrap{nonce_, log, merge_.merged_w});
                last_send_ = now;
                break;
            }
            case Stage::activating:
                for (const auto& m : target_)
                    if (!activate_acks_.count(m)) ctx.send(m, Activate{nonce_});
                last_send_ = now;
                break;
            default:
                break;
        }
    }
    ctx.set_timer(opts_.resend_interval, kTimerResend);
}

std::uint64_t MmReconfigDriver::state_hash() const {
    Hasher h;
    h.u64(static_cast<std::uint64_t>(stage_));
    h.u64(nonce_);
    for (const auto& m : opts_.matchmakers) h.str(m);
    for (const auto& m : target_) h.str(m);
    return h.h;
}

}  // namespace matchpax
