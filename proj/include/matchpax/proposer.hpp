#pragma once

#include <map>
#include <optional>
#include <set>

#include "matchpax/node.hpp"

namespace matchpax {

struct ProposerOptions {
    std::vector<NodeId> matchmakers;
    int f = 1;
    bool fast = false;           // Fast Paxos variant: f+1 acceptors, unanimous Phase 2 quorum
    bool round_pruning = false;  // configurations below the max seen vr stop needing coverage
    bool auto_gc = false;        // issue GarbageA as soon as a scenario guard holds
    Time retry_delay = 40;
    Time resend_interval = 60;
    std::uint64_t rng_seed = 1;
    // Seeded bug for mutant testing: GarbageA issued right after matchmaking
    // with no scenario guard. Never set outside tests.
    bool unsafe_gc_without_guards = false;
};

enum class GcIssue { sent, no_scenario_error };

// Single-decree Matchmaker Paxos proposer. Also runs plain Paxos against a
// fixed configuration (no matchmakers) so matchmaker reconfiguration can
// reuse it for choosing the next matchmaker set.
class ProposerNode : public Node {
  public:
    enum class Phase { idle, matchmaking, phase1, phase2, chosen };

    ProposerNode(NodeId id, ProposerOptions opts);

    void on_message(const Envelope& env, Context& ctx) override;
    void on_timer(std::uint64_t tag, Context& ctx) override;
    std::uint64_t state_hash() const override;

    // Starts the next owned round. The value may be absent under proactive
    // matchmaking; Phase 2 then waits for a client value.
    void begin_round(std::optional<Value> value, Configuration config, Context& ctx);
    // Plain Paxos against a fixed configuration: matchmaking is skipped and
    // Phase 1 runs directly on `config`.
    void begin_fixed(Round round, Configuration config, Value value, Context& ctx);
    // Round advance with Phase 1 bypassing: requires that this proposer owns
    // the current round and completed (or bypassed) its Phase 1.
    void advance_bypassed(Configuration config, Context& ctx);

    GcIssue maybe_issue_gc(Context& ctx);
    int gc_scenario() const;  // 0 = none
    // Scenario 3 inputs are owned by the surrounding deployment.
    void note_chosen_replicated() { chosen_replicated_ = true; }

    Phase phase() const { return phase_; }
    const Round& round() const { return round_; }
    const Round& k() const { return k_; }
    const std::optional<Value>& value() const { return value_; }
    bool chosen() const { return phase_ == Phase::chosen; }
    const Value& chosen_value() const { return chosen_value_; }
    bool gc_acknowledged() const { return gc_acked_; }

  private:
    friend class MmReconfigDriver;

    void start_matchmaking(Context& ctx);
    void enter_phase1(Context& ctx);
    void phase1_try_complete(Context& ctx);
    void enter_phase2(Context& ctx);
    void send_phase2a(Context& ctx);
    void try_chosen(Context& ctx);
    void handle_nack(const Round& r, Context& ctx);
    bool mine(const Round& r) const { return r == round_; }

    ProposerOptions opts_;
    Phase phase_ = Phase::idle;
    Round round_;
    std::optional<Value> value_;
    Configuration config_;
    bool fixed_mode_ = false;

    // Matchmaking.
    std::map<NodeId, MatchB> matchb_;
    ConfigHistory history_;

    // Phase 1.
    std::set<NodeId> p1_responders_;
    Round k_;             // largest vr seen (bottom == -1)
    std::set<Value> vset_;  // vv's paired with k (fast mode cares about multiplicity)
    bool phase1_complete_ = false;
    Round phase1_fact_round_;  // round whose Phase-1 facts we hold (for bypassing)
    bool facts_carried_ = false;

    // Phase 2.
    std::map<NodeId, Value> p2_votes_;
    bool proposed_ = false;
    bool any_proposed_ = false;
    Value chosen_value_;

    // Garbage collection.
    bool gc_issued_ = false;
    bool gc_acked_ = false;
    std::set<NodeId> garbageb_;
    bool chosen_replicated_ = false;
    std::set<NodeId> hint_acks_;

    NodeId client_;
    std::int64_t client_seq_ = 0;
    std::int64_t next_counter_ = 0;
    Rng rng_;
};

}  // namespace matchpax
