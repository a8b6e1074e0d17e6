#include "matchpax/leader.hpp"

#include <algorithm>

#include "matchpax/replica.hpp"

namespace matchpax {

namespace {
constexpr std::uint64_t kTimerTick = 1;
constexpr std::uint64_t kTimerBoot = 2;
}  // namespace

LeaderNode::LeaderNode(NodeId id, LeaderOptions opts)
    : Node(std::move(id)), opts_(std::move(opts)), rng_(opts_.rng_seed) {
    // Election tie-break: higher ids wait less, so they win contended starts.
    std::vector<NodeId> sorted = opts_.proposers;
    std::sort(sorted.begin(), sorted.end());
    auto it = std::find(sorted.begin(), sorted.end(), id_);
    std::size_t rank = it == sorted.end() ? 0 : static_cast<std::size_t>(it - sorted.begin());
    jitter_ = static_cast<Time>((sorted.size() - 1 - rank) * (opts_.hb_interval / 2 + 1));
    active_config_ = opts_.initial_config;
    target_config_ = opts_.initial_config;
}

void LeaderNode::on_start(Context& ctx) {
    last_leader_contact_ = ctx.now();
    if (opts_.bootstrap_leader) ctx.set_timer(0, kTimerBoot);
    ctx.set_timer(opts_.hb_interval, kTimerTick);
}

const Configuration* LeaderNode::config_for_round(const Round& r) const {
    auto it = round_configs_.find(r);
    return it == round_configs_.end() ? nullptr : &it->second;
}

void LeaderNode::become_follower(const Round& observed, Context& ctx) {
    max_counter_seen_ = std::max(max_counter_seen_, observed.counter);
    if (observed.owner != id_) last_leader_round_ = observed;
    if (role_ == Role::follower) return;
    role_ = Role::follower;
    phase_ = LPhase::none;
    queue_.clear();
    last_leader_contact_ = ctx.now();
    ctx.observe("stepdown", round_.str());
}

void LeaderNode::start_election(Context& ctx) {
    role_ = Role::candidate;
    max_counter_seen_ = std::max(max_counter_seen_, round_.counter);
    round_ = Round::of(max_counter_seen_ + 1, id_, 0);
    max_counter_seen_ = round_.counter;
    bypass_eligible_ = false;
    election_started_ = ctx.now();
    ctx.observe("elect", round_.str());
    for (const auto& p : opts_.proposers)
        if (p != id_) ctx.send(p, LeaderElect{round_});
    // Chosen-watermark discovery runs alongside matchmaking.
    needs_watermarks_ = true;
    watermark_replies_.clear();
    for (const auto& r : opts_.replicas) ctx.send(r, WatermarkRequest{});
    begin_matchmaking(ctx);
}

void LeaderNode::begin_matchmaking(Context& ctx) {
    phase_ = LPhase::matchmaking;
    matchmaking_complete_ = false;
    matchb_.clear();
    target_config_.label = round_.str();  // labels derive from the proposing round
    for (const auto& m : opts_.matchmakers) ctx.send(m, MatchA{round_, target_config_});
    last_send_time_ = ctx.now();
}

void LeaderNode::on_matchmaking_done(Context& ctx) {
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
    if (opts_.unsafe_gc_without_guards && !garbage_sent_) {
        garbage_sent_ = true;
        garbageb_.clear();
        for (const auto& m : opts_.matchmakers) ctx.send(m, GarbageA{round_});
    }
    if (bypass_eligible_) {
        // Phase 1 bypassing: the previous round was ours and its Phase 1
        // completed; slots above next_slot_ are known empty below this round.
        last_phase1_round_ = round_;
        enter_steady(ctx);
        return;
    }
    matchmaking_complete_ = true;
    try_enter_phase1(ctx);
}

void LeaderNode::try_enter_phase1(Context& ctx) {
    if (phase_ != LPhase::matchmaking || !matchmaking_complete_) return;
    if (needs_watermarks_) {
        if (watermark_replies_.size() < static_cast<std::size_t>(opts_.f + 1)) return;
        Slot w0 = kNoSlot;
        for (const auto& [r, s] : watermark_replies_) w0 = std::max(w0, s);
        chosen_watermark_ = std::max(chosen_watermark_, w0);
        next_slot_ = std::max(next_slot_, chosen_watermark_);
        needs_watermarks_ = false;
    }
    phase_ = LPhase::phase1;
    p1_responders_.clear();
    p1_votes_.clear();
    p1_first_slot_ = chosen_watermark_ + 1;
    if (history_.empty()) {
        last_phase1_round_ = round_;
        enter_steady(ctx);
        return;
    }
    std::set<NodeId> targets;
    for (const auto& [r, c] : history_)
        for (const auto& a : c.acceptors) targets.insert(a);
    for (const auto& a : targets) ctx.send(a, Phase1A{round_, p1_first_slot_});
    last_send_time_ = ctx.now();
}

void LeaderNode::phase1_try_complete(Context& ctx) {
    std::vector<NodeId> responders(p1_responders_.begin(), p1_responders_.end());
    for (const auto& [r, c] : history_)
        if (!quorum_covered(c.phase1_quorums, responders)) return;
    last_phase1_round_ = round_;

    // Classify the log above the chosen watermark: re-propose maybe-chosen
    // values, no-op the holes, fetch known-chosen slots from the replicas.
    Slot max_seen = next_slot_;
    for (const auto& [s, vote] : p1_votes_) max_seen = std::max(max_seen, s);
    for (Slot s = p1_first_slot_; s <= max_seen; ++s) {
        auto& st = slots_[s];
        if (st.chosen) continue;
        auto it = p1_votes_.find(s);
        if (it != p1_votes_.end() && it->second.chosen) {
            if (!fetching_.count(s)) {
                fetching_.insert(s);
                for (const auto& r : opts_.replicas) ctx.send(r, CatchupRequest{s, s});
            }
            continue;
        }
        if (it != p1_votes_.end() && !it->second.vr.is_bottom()) {
            st.value = it->second.vv;
        } else if (st.value.is_no_op() && st.value.payload.empty() && st.votes.empty()) {
            st.value = Value::no_op();  // hole
        }
        st.round = round_;
        st.votes.clear();
    }
    next_slot_ = std::max(next_slot_, max_seen);
    enter_steady(ctx);
    // Repair proposals and hole no-ops go out as one batch.
    for (Slot s = p1_first_slot_; s <= max_seen; ++s) {
        auto it = slots_.find(s);
        if (it != slots_.end() && !it->second.chosen && !fetching_.count(s)) propose(s, ctx);
    }
}

void LeaderNode::enter_steady(Context& ctx) {
    role_ = Role::leader;
    phase_ = LPhase::steady;
    active_config_ = target_config_;
    round_configs_[round_] = active_config_;
    last_activation_time_ = ctx.now();

    // Fresh GC orchestration for this round.
    gc_k_ = next_slot_;
    hints_sent_ = false;
    hint_acks_.clear();
    if (!opts_.unsafe_gc_without_guards) {
        garbage_sent_ = false;
        garbageb_.clear();
    }
    gc_done_ = false;
    flush_queue(ctx);
    gc_progress(ctx);
}

void LeaderNode::flush_queue(Context& ctx) {
    while (!queue_.empty() && phase_ == LPhase::steady) {
        ClientRequest req = std::move(queue_.front());
        queue_.pop_front();
        assign_slot(req, ctx);
    }
}

void LeaderNode::assign_slot(const ClientRequest& req, Context& ctx) {
    auto& entry = client_table_[req.client];
    if (req.seq <= entry.first) {
        // Duplicate: ask the designated replica to re-send the cached reply.
        if (entry.second >= 0 && !opts_.replicas.empty())
            ctx.send(opts_.replicas[static_cast<std::size_t>(entry.second) % opts_.replicas.size()],
                     ReplayRequest{req.client, req.seq});
        return;
    }
    Slot s = ++next_slot_;
    entry = {req.seq, s};
    auto& st = slots_[s];
    st.value = Value::command(encode_command({req.client, req.seq, req.payload}));
    st.round = round_;
    propose(s, ctx);
}

void LeaderNode::propose(Slot s, Context& ctx) {
    auto& st = slots_[s];
    const Configuration* c = config_for_round(st.round);
    if (!c) return;
    ctx.observe_phase2a(s, st.round, st.value, false);
    if (opts_.thrifty && !c->phase2_quorums.empty()) {
        const auto& q = c->phase2_quorums[rng_.below(c->phase2_quorums.size())];
        for (const auto& a : q) ctx.send(a, Phase2A{st.round, s, st.value, false});
    } else {
        for (const auto& a : c->acceptors) ctx.send(a, Phase2A{st.round, s, st.value, false});
    }
}

void LeaderNode::handle_client(const ClientRequest& req, Context& ctx) {
    if (role_ == Role::follower) {
        ctx.send(req.client, Nack{last_leader_round_});
        return;
    }
    switch (phase_) {
        case LPhase::steady:
            assign_slot(req, ctx);
            break;
        case LPhase::matchmaking:
            // Case 1: during a reconfiguration's matchmaking the old round's
            // acceptors are oblivious and can keep choosing commands.
            if (opts_.proactive && round_.sub > 0) {
                Round prev{round_.counter, round_.owner, round_.sub - 1};
                if (config_for_round(prev)) {
                    auto& entry = client_table_[req.client];
                    if (req.seq <= entry.first) break;
                    Slot s = ++next_slot_;
                    entry = {req.seq, s};
                    auto& st = slots_[s];
                    st.value = Value::command(encode_command({req.client, req.seq, req.payload}));
                    st.round = prev;
                    propose(s, ctx);
                    break;
                }
            }
            [[fallthrough]];
        case LPhase::phase1:
            // Case 2: commands wait for Phase 1 quorum coverage.
            if (queue_.size() < opts_.queue_cap) {
                queue_.push_back(req);
                ++queued_total_;
            }
            break;
        case LPhase::none:
            break;
    }
}

void LeaderNode::handle_phase2b(const NodeId& from, const Phase2B& m, Context& ctx) {
    auto it = slots_.find(m.slot);
    if (it == slots_.end() || it->second.chosen || !(it->second.round == m.round)) return;
    it->second.votes.insert(from);
    const Configuration* c = config_for_round(m.round);
    if (!c) return;
    std::vector<NodeId> voters(it->second.votes.begin(), it->second.votes.end());
    if (quorum_covered(c->phase2_quorums, voters)) mark_chosen(m.slot, ctx);
}

void LeaderNode::mark_chosen(Slot s, Context& ctx) {
    auto& st = slots_[s];
    if (st.chosen) return;
    st.chosen = true;
    ctx.observe_chosen(s, st.round, st.value);
    for (const auto& r : opts_.replicas) ctx.send(r, Chosen{s, st.value});
    advance_watermark();
    gc_progress(ctx);
}

void LeaderNode::advance_watermark() {
    while (true) {
        auto it = slots_.find(chosen_watermark_ + 1);
        if (it == slots_.end() || !it->second.chosen) break;
        ++chosen_watermark_;
    }
}

Slot LeaderNode::persisted_quorum_watermark() const {
    std::vector<Slot> ws;
    for (const auto& [r, s] : persisted_) ws.push_back(s);
    if (ws.size() < static_cast<std::size_t>(opts_.f + 1)) return kNoSlot;
    std::sort(ws.begin(), ws.end(), std::greater<>());
    return ws[opts_.f];
}

void LeaderNode::prune_slots() {
    // Entries at or below the persisted watermark live on f+1 replicas; the
    // leader no longer needs their values.
    Slot keep_above = std::min(chosen_watermark_, persisted_quorum_watermark());
    slots_.erase(slots_.begin(), slots_.upper_bound(keep_above));
}

void LeaderNode::reconfigure(Configuration c_new, Context& ctx) {
    if (role_ != Role::leader || phase_ != LPhase::steady) return;
    round_ = round_successor(round_);
    ctx.observe("reconfigure", round_.str());
    target_config_ = std::move(c_new);
    bypass_eligible_ =
        opts_.bypass && last_phase1_round_ == Round{round_.counter, round_.owner, round_.sub - 1};
    needs_watermarks_ = false;  // our own watermark knowledge carries over
    begin_matchmaking(ctx);
}

void LeaderNode::gc_progress(Context& ctx) {
    if (!opts_.gc || phase_ != LPhase::steady || gc_done_ || garbage_sent_ ||
        opts_.unsafe_gc_without_guards)
        return;
    // (a) every slot assigned before this round began is chosen (Scenario 1
    //     for the repairs, Scenario 2 for the empty tail),
    if (chosen_watermark_ < gc_k_) return;
    // (b) the chosen prefix is stored on f+1 of the 2f+1 replicas,
    if (gc_k_ >= 0 && persisted_quorum_watermark() < gc_k_) return;
    // (c) a Phase 2 quorum of the active configuration acknowledged the
    //     chosen hints; only then is GarbageA issued.
    if (!hints_sent_) {
        hints_sent_ = true;
        for (const auto& a : active_config_.acceptors) ctx.send(a, ChosenHint{round_, gc_k_});
        last_send_time_ = ctx.now();
        return;
    }
    std::vector<NodeId> acks(hint_acks_.begin(), hint_acks_.end());
    if (!quorum_covered(active_config_.phase2_quorums, acks)) return;
    garbage_sent_ = true;
    garbageb_.clear();
    for (const auto& m : opts_.matchmakers) ctx.send(m, GarbageA{round_});
    last_send_time_ = ctx.now();
}

void LeaderNode::send_heartbeats(Context& ctx) {
    for (const auto& p : opts_.proposers)
        if (p != id_) ctx.send(p, Heartbeat{round_});
}

void LeaderNode::on_message(const Envelope& env, Context& ctx) {
    if (const auto* cr = std::get_if<ClientRequest>(&env.msg)) {
        handle_client(*cr, ctx);
    } else if (const auto* p2b = std::get_if<Phase2B>(&env.msg)) {
        handle_phase2b(env.from, *p2b, ctx);
    } else if (const auto* mb = std::get_if<MatchB>(&env.msg)) {
        if (phase_ != LPhase::matchmaking || !(mb->round == round_)) return;
        matchb_[env.from] = *mb;
        if (matchb_.size() >= static_cast<std::size_t>(opts_.f + 1)) on_matchmaking_done(ctx);
    } else if (const auto* wr = std::get_if<WatermarkReply>(&env.msg)) {
        watermark_replies_[env.from] = wr->exec_watermark;
        try_enter_phase1(ctx);
    } else if (const auto* p1b = std::get_if<Phase1B>(&env.msg)) {
        if (phase_ != LPhase::phase1 || !(p1b->round == round_)) return;
        p1_responders_.insert(env.from);
        for (const auto& [s, vote] : p1b->votes) {
            auto& best = p1_votes_[s];
            if (vote.chosen) best.chosen = true;
            if (vote.vr > best.vr) {
                best.vr = vote.vr;
                best.vv = vote.vv;
            }
        }
        phase1_try_complete(ctx);
    } else if (const auto* cu = std::get_if<CatchupReply>(&env.msg)) {
        for (const auto& [s, v] : cu->entries) {
            if (!fetching_.erase(s)) continue;
            auto& st = slots_[s];
            if (!st.chosen) {
                st.value = v;
                st.chosen = true;
                ctx.observe("fetched_chosen", std::to_string(s));
                for (const auto& r : opts_.replicas) ctx.send(r, Chosen{s, v});
            }
        }
        advance_watermark();
        gc_progress(ctx);
    } else if (const auto* pp = std::get_if<PrefixPersisted>(&env.msg)) {
        Slot& cur = persisted_[env.from];
        cur = std::max(cur, pp->slot);
        prune_slots();
        gc_progress(ctx);
    } else if (const auto* ha = std::get_if<ChosenHintAck>(&env.msg)) {
        if (ha->round == round_ && ha->upto >= gc_k_) {
            hint_acks_.insert(env.from);
            gc_progress(ctx);
        }
    } else if (const auto* gb = std::get_if<GarbageB>(&env.msg)) {
        if (!(gb->round == round_) || gc_done_ || !garbage_sent_) return;
        garbageb_.insert(env.from);
        if (garbageb_.size() >= static_cast<std::size_t>(opts_.f + 1)) {
            gc_done_ = true;
            ctx.observe("gc_done", round_.str());
            // Everything below this round can be shut down.
            std::set<NodeId> retired;
            for (const auto& [r, c] : round_configs_)
                if (r < round_)
                    for (const auto& a : c.acceptors) retired.insert(a);
            for (const auto& a : active_config_.acceptors) retired.erase(a);
            if (!opts_.driver.empty())
                ctx.send(opts_.driver,
                         RetireNotice{round_, std::vector<NodeId>(retired.begin(), retired.end())});
            for (auto it = round_configs_.begin(); it != round_configs_.end();)
                it = it->first < round_ ? round_configs_.erase(it) : std::next(it);
        }
    } else if (const auto* nk = std::get_if<Nack>(&env.msg)) {
        if (nk->round > round_ && role_ != Role::follower) {
            become_follower(nk->round, ctx);
        } else if (nk->round == round_ && role_ != Role::follower &&
                   phase_ == LPhase::matchmaking) {
            // A matchmaker already logged this round (a lost reply or a
            // bootstrap-merged entry); re-enter with the next owned round.
            round_ = round_successor(round_);
            begin_matchmaking(ctx);
        }
    } else if (const auto* hb = std::get_if<Heartbeat>(&env.msg)) {
        max_counter_seen_ = std::max(max_counter_seen_, hb->round.counter);
        if (role_ == Role::follower) {
            last_leader_contact_ = ctx.now();
            last_leader_round_ = hb->round;
        } else if (hb->round > round_) {
            become_follower(hb->round, ctx);
        }
    } else if (const auto* le = std::get_if<LeaderElect>(&env.msg)) {
        max_counter_seen_ = std::max(max_counter_seen_, le->round.counter);
        if (role_ == Role::follower) {
            last_leader_contact_ = ctx.now();
        } else if (role_ == Role::candidate && le->round > round_) {
            become_follower(le->round, ctx);
        }
    } else if (const auto* rc = std::get_if<ReconfigureCmd>(&env.msg)) {
        reconfigure(rc->config, ctx);
    } else if (std::get_if<ElectCmd>(&env.msg)) {
        start_election(ctx);
    } else if (const auto* vc = std::get_if<ViewChange>(&env.msg)) {
        opts_.matchmakers = vc->matchmakers;
    } else if (std::get_if<StateHashRequest>(&env.msg)) {
        ctx.send(env.from, StateHashReply{state_hash()});
    }
}

void LeaderNode::on_timer(std::uint64_t tag, Context& ctx) {
    if (tag == kTimerBoot) {
        if (role_ == Role::follower && round_.is_bottom()) start_election(ctx);
        return;
    }
    if (tag != kTimerTick) return;
    Time now = ctx.now();
    if (role_ == Role::leader) {
        send_heartbeats(ctx);
    } else if (opts_.election_timeout > 0) {
        if (role_ == Role::follower &&
            now - last_leader_contact_ >= opts_.election_timeout + jitter_) {
            start_election(ctx);
        } else if (role_ == Role::candidate &&
                   now - election_started_ >= 4 * opts_.election_timeout + jitter_) {
            start_election(ctx);  // stuck election, try a higher round
        }
    }
    if (now - last_send_time_ >= opts_.resend_interval && role_ != Role::follower) {
        switch (phase_) {
            case LPhase::matchmaking:
                for (const auto& m : opts_.matchmakers)
                    if (!matchb_.count(m)) ctx.send(m, MatchA{round_, target_config_});
                if (needs_watermarks_)
                    for (const auto& r : opts_.replicas)
                        if (!watermark_replies_.count(r)) ctx.send(r, WatermarkRequest{});
                last_send_time_ = now;
                break;
            case LPhase::phase1:
                for (const auto& [r, c] : history_)
                    for (const auto& a : c.acceptors)
                        if (!p1_responders_.count(a)) ctx.send(a, Phase1A{round_, p1_first_slot_});
                last_send_time_ = now;
                break;
            case LPhase::steady: {
                for (auto& [s, st] : slots_) {
                    if (st.chosen) continue;
                    const Configuration* c = config_for_round(st.round);
                    if (!c) {  // round retired mid-flight; adopt the current one
                        st.round = round_;
                        st.votes.clear();
                        c = &active_config_;
                    }
                    for (const auto& a : c->acceptors)
                        if (!st.votes.count(a)) ctx.send(a, Phase2A{st.round, s, st.value, false});
                }
                for (Slot s : fetching_)
                    for (const auto& r : opts_.replicas) ctx.send(r, CatchupRequest{s, s});
                if (hints_sent_ && !garbage_sent_)
                    for (const auto& a : active_config_.acceptors)
                        ctx.send(a, ChosenHint{round_, gc_k_});
                if (garbage_sent_ && !gc_done_)
                    for (const auto& m : opts_.matchmakers) ctx.send(m, GarbageA{round_});
                last_send_time_ = now;
                break;
            }
            case LPhase::none:
                break;
        }
    }
    ctx.set_timer(opts_.hb_interval, kTimerTick);
}

std::uint64_t LeaderNode::state_hash() const {
    Hasher h;
    h.u64(static_cast<std::uint64_t>(role_));
    h.u64(static_cast<std::uint64_t>(phase_));
    h.round(round_);
    h.i64(chosen_watermark_);
    h.i64(next_slot_);
    h.u64(slots_.size());
    for (const auto& [s, st] : slots_) {
        h.i64(s);
        h.value(st.value);
        h.round(st.round);
        h.u64(st.chosen);
    }
    h.u64(gc_done_);
    return h.h;
}

}  // namespace matchpax
