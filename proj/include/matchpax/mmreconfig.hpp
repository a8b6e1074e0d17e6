#pragma once

#include <map>
#include <memory>
#include <set>

#include "matchpax/node.hpp"
#include "matchpax/proposer.hpp"

namespace matchpax {

struct MergeResult {
    std::map<Round, Configuration> merged_log;
    Round merged_w;
};

// Merges f+1 StopB replies: max watermark, union of logs, entries below the
// watermark removed. Conflicting configurations for one round cannot happen
// in a safe system; they throw.
MergeResult merge_stop_replies(const std::vector<StopB>& replies);

struct DriverOptions {
    std::vector<NodeId> matchmakers;  // the currently active set
    std::vector<NodeId> proposers;    // receive ViewChange after activation
    int f = 1;
    std::uint64_t view_version = 1;
    Time resend_interval = 80;
    std::uint64_t rng_seed = 7;
};

// Runs the matchmaker reconfiguration protocol: stop the old set, merge
// their frozen state, bootstrap the new set, choose the new set with a
// single-decree Paxos over the old matchmakers (reusing the proposer state
// machine), then activate. Competing reconfigurations are arbitrated by the
// embedded Paxos: the loser adopts the chosen set.
class MmReconfigDriver : public Node {
  public:
    enum class Stage { idle, stopping, working, activating, done };

    MmReconfigDriver(NodeId id, DriverOptions opts);

    void on_start(Context& ctx) override;
    void on_message(const Envelope& env, Context& ctx) override;
    void on_timer(std::uint64_t tag, Context& ctx) override;
    std::uint64_t state_hash() const override;

    void start_reconfiguration(std::vector<NodeId> m_new, Context& ctx);

    Stage stage() const { return stage_; }
    const std::vector<NodeId>& active_matchmakers() const { return opts_.matchmakers; }
    const std::vector<NodeId>& terminable_old() const { return old_set_; }

  private:
    class EmbeddedContext;
    void begin_bootstrap(Context& ctx);
    void begin_choice(Context& ctx);
    void on_chosen_set(std::vector<NodeId> chosen, Context& ctx);
    void maybe_activate(Context& ctx);
    void begin_activation(Context& ctx);
    void finish(Context& ctx);
    void feed_embedded(const Envelope& env, Context& ctx);

    DriverOptions opts_;
    Stage stage_ = Stage::idle;
    std::vector<NodeId> old_set_;
    std::vector<NodeId> candidate_;  // the set this driver proposes
    std::vector<NodeId> target_;     // the set actually chosen
    std::uint64_t nonce_ = 0;
    std::map<NodeId, StopB> stopb_;
    MergeResult merge_;
    std::set<NodeId> bootstrap_acks_;
    std::set<NodeId> activate_acks_;
    std::unique_ptr<ProposerNode> embedded_;
    std::int64_t attempt_ = 0;
    Time last_send_ = 0;
    Rng rng_;
};

std::string encode_id_list(const std::vector<NodeId>& ids);
std::vector<NodeId> decode_id_list(const std::string& bytes);

}  // namespace matchpax
