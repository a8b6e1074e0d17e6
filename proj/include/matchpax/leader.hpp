#pragma once

#include <deque>
#include <map>
#include <set>

#include "matchpax/node.hpp"

namespace matchpax {

struct LeaderOptions {
    std::vector<NodeId> proposers;  // all proposers, this node included
    std::vector<NodeId> matchmakers;
    std::vector<NodeId> replicas;
    NodeId driver;  // receives retire notices; empty = nobody
    int f = 1;

    bool proactive = true;  // process commands during matchmaking in the old round
    bool bypass = true;     // skip Phase 1 when advancing own rounds
    bool gc = true;         // garbage collect retired configurations
    bool thrifty = false;   // Phase2A to one randomly selected Phase 2 quorum

    Configuration initial_config;
    bool bootstrap_leader = false;  // elect self at startup

    Time hb_interval = 10;
    Time election_timeout = 0;  // 0 = automatic elections disabled
    Time resend_interval = 80;
    std::size_t queue_cap = 10000;
    std::uint64_t rng_seed = 1;

    // Seeded bug for mutant testing: GarbageA right after matchmaking, no
    // scenario guards. Never set outside tests.
    bool unsafe_gc_without_guards = false;
};

// Matchmaker MultiPaxos leader: slot management, Phase 1 over the log
// suffix, hole filling, round-advance reconfiguration with Phase 1
// bypassing, and garbage collection orchestration. Every proposer runs this
// state machine; election plumbing decides who is actually leading.
class LeaderNode : public Node {
  public:
    enum class Role { follower, candidate, leader };
    enum class LPhase { none, matchmaking, phase1, steady };

    LeaderNode(NodeId id, LeaderOptions opts);

    void on_start(Context& ctx) override;
    void on_message(const Envelope& env, Context& ctx) override;
    void on_timer(std::uint64_t tag, Context& ctx) override;
    std::uint64_t state_hash() const override;

    Role role() const { return role_; }
    LPhase phase() const { return phase_; }
    const Round& round() const { return round_; }
    const Configuration& active_config() const { return active_config_; }
    Slot chosen_watermark() const { return chosen_watermark_; }
    Slot next_slot() const { return next_slot_; }
    bool gc_complete() const { return gc_done_; }
    std::int64_t queued_commands_total() const { return queued_total_; }
    Time last_activation_time() const { return last_activation_time_; }

    // Direct entry points (the message path routes here too).
    void start_election(Context& ctx);
    void reconfigure(Configuration c_new, Context& ctx);

  private:
    struct SlotState {
        Value value;
        Round round;             // round this proposal runs in
        std::set<NodeId> votes;  // Phase2B senders
        bool chosen = false;
    };

    void become_follower(const Round& observed, Context& ctx);
    void begin_matchmaking(Context& ctx);
    void on_matchmaking_done(Context& ctx);
    void try_enter_phase1(Context& ctx);
    void phase1_try_complete(Context& ctx);
    void enter_steady(Context& ctx);
    void assign_slot(const ClientRequest& req, Context& ctx);
    void propose(Slot s, Context& ctx);
    void handle_client(const ClientRequest& req, Context& ctx);
    void handle_phase2b(const NodeId& from, const Phase2B& m, Context& ctx);
    void mark_chosen(Slot s, Context& ctx);
    void advance_watermark();
    Slot persisted_quorum_watermark() const;
    void prune_slots();
    void gc_progress(Context& ctx);
    void send_heartbeats(Context& ctx);
    const Configuration* config_for_round(const Round& r) const;
    void flush_queue(Context& ctx);

    LeaderOptions opts_;
    Role role_ = Role::follower;
    LPhase phase_ = LPhase::none;
    Round round_;
    Configuration active_config_;   // config of round_ once steady
    Configuration target_config_;   // config being installed for round_
    std::map<Round, Configuration> round_configs_;  // rounds this leader ran
    std::int64_t max_counter_seen_ = -1;

    // Election plumbing.
    Time last_leader_contact_ = 0;
    Time election_started_ = 0;
    Time jitter_ = 0;
    Round last_leader_round_;  // best guess at the current leader, for redirects

    // Matchmaking state.
    std::map<NodeId, MatchB> matchb_;
    bool matchmaking_complete_ = false;
    ConfigHistory history_;
    bool needs_watermarks_ = false;
    std::map<NodeId, Slot> watermark_replies_;
    bool bypass_eligible_ = false;
    Round last_phase1_round_;  // round whose Phase-1 facts this leader holds

    // Phase 1 state.
    std::set<NodeId> p1_responders_;
    std::map<Slot, Phase1bVote> p1_votes_;  // max-vr vote per slot
    Slot p1_first_slot_ = 0;

    // Log.
    std::map<Slot, SlotState> slots_;
    Slot chosen_watermark_ = kNoSlot;
    Slot next_slot_ = kNoSlot;
    std::set<Slot> fetching_;  // already-chosen slots being fetched from replicas

    // Client handling.
    std::map<NodeId, std::pair<std::int64_t, Slot>> client_table_;
    std::deque<ClientRequest> queue_;
    std::int64_t queued_total_ = 0;

    // Replica tracking.
    std::map<NodeId, Slot> persisted_;

    // GC orchestration for round_.
    Slot gc_k_ = kNoSlot;
    bool hints_sent_ = false;
    std::set<NodeId> hint_acks_;
    bool garbage_sent_ = false;
    std::set<NodeId> garbageb_;
    bool gc_done_ = false;

    Time last_activation_time_ = -1;  // when the current config became active
    Time last_send_time_ = 0;
    Rng rng_;
};

}  // namespace matchpax
