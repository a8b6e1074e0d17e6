#pragma once

#include <map>
#include <memory>

#include "matchpax/node.hpp"

namespace matchpax {

struct MatchmakerOptions {
    bool journal_enabled = true;
    // Fresh matchmakers created as reconfiguration targets stay inactive
    // until bootstrapped and activated.
    bool starts_active = true;
    // Seeded bug for mutant testing: accept MatchA for rounds at or below
    // ones already logged. Never set outside tests.
    bool unsafe_non_monotone = false;
};

// Matchmaker state machine: a round-indexed configuration log with a garbage
// collection watermark, stop support for matchmaker reconfiguration, and an
// embedded plain-Paxos acceptor used to choose the next matchmaker set.
class MatchmakerNode : public Node {
  public:
    MatchmakerNode(NodeId id, std::shared_ptr<Journal> journal, MatchmakerOptions opts = {});

    void on_start(Context& ctx) override;
    void on_message(const Envelope& env, Context& ctx) override;
    std::uint64_t state_hash() const override;

    const std::map<Round, Configuration>& log() const { return log_; }
    const Round& gc_watermark() const { return watermark_; }
    bool stopped() const { return stopped_; }
    bool active() const { return active_; }

  private:
    void handle_match_a(const NodeId& from, const MatchA& m, Context& ctx);
    void handle_garbage_a(const NodeId& from, const GarbageA& m, Context& ctx);
    void handle_stop_a(const NodeId& from, Context& ctx);
    void handle_bootstrap(const NodeId& from, const Bootstrap& m, Context& ctx);
    void handle_activate(const NodeId& from, const Activate& m, Context& ctx);
    void handle_reconf_p1(const NodeId& from, const ReconfPhase1A& m, Context& ctx);
    void handle_reconf_p2(const NodeId& from, const ReconfPhase2A& m, Context& ctx);
    ConfigHistory snapshot_log() const;
    Round highest_logged() const;
    void journal_append(const std::string& rec);

    std::map<Round, Configuration> log_;
    Round watermark_;  // bottom == "initially 0": nothing garbage collected
    bool stopped_ = false;
    bool active_ = true;
    std::uint64_t bootstrap_nonce_ = 0;
    bool bootstrapped_ = false;

    // Embedded acceptor (Algorithm 2, single decree) for choosing M_new.
    Round reconf_promised_;
    Round reconf_vr_;
    std::vector<NodeId> reconf_vv_;

    std::shared_ptr<Journal> journal_;
    MatchmakerOptions opts_;
};

}  // namespace matchpax
