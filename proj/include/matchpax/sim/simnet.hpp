#pragma once

#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <string>

#include "matchpax/node.hpp"
#include "matchpax/sim/oracle.hpp"

namespace matchpax {

// Timed fault injection. Percentages apply per message send; delays are
// sampled uniformly from [delay_min, delay_max]; type_delays add a fixed
// extra delay per message kind (variant index), which is how the ablation
// injects its 250 ms Phase1B/MatchB delays.
struct FaultPlan {
    std::uint64_t drop_pct = 0;
    std::uint64_t duplicate_pct = 0;
    Time delay_min = 1;
    Time delay_max = 1;
    std::map<std::size_t, Time> type_delays;

    struct Partition {
        Time from = 0, to = 0;
        std::vector<NodeId> side_a, side_b;
    };
    std::vector<Partition> partitions;

    struct Crash {
        Time at = 0;
        NodeId node;
        Time restart_at = -1;  // -1: stays down
    };
    std::vector<Crash> crashes;
};

struct Schedule {
    std::uint64_t seed = 0;
    FaultPlan plan;
    Time horizon = 1000;
};

std::string schedule_to_text(const Schedule& s);
bool schedule_from_text(const std::string& text, Schedule& out);

struct TraceEvent {
    Time at;
    NodeId node;
    std::string kind;
    std::uint64_t digest;
};

struct Trace {
    std::uint64_t hash = 0;
    std::vector<TraceEvent> events;  // populated only when recording is on
    OracleLedger ledger;
    std::map<NodeId, std::uint64_t> terminal_hashes;
    std::vector<std::string> panics;
    std::uint64_t deliveries = 0;
};

void dump_trace(const Trace& t, std::ostream& os);

// Deterministic discrete-event simulator. Single-threaded by contract: the
// trace hash is a pure function of (seed, plan, topology, workload). Host
// events fire at their timestamp ahead of same-timestamp queue events;
// queued events tie-break in insertion order.
class SimNet {
  public:
    using NodeFactory = std::function<std::unique_ptr<Node>(std::shared_ptr<Journal>)>;

    explicit SimNet(const Schedule& schedule, bool record_events = false);

    void add_node(const NodeId& id, NodeFactory factory);
    // Scripted host action (workload step, experiment event).
    void at(Time t, std::function<void(SimNet&)> action);
    // Injects a message as if sent by `from`, subject to the fault plan
    // (used by workload scripts).
    void post(const NodeId& from, const NodeId& to, Message m);
    // Reliable synchronous control delivery (experiment events): the target
    // handles the message immediately, no faults applied.
    void inject(const NodeId& from, const NodeId& to, Message m);

    void crash(const NodeId& id);
    void restart(const NodeId& id);
    bool alive(const NodeId& id) const;

    Trace run();             // runs to the schedule horizon
    void run_until(Time t);  // incremental stepping for experiments
    Trace finish();

    Time now() const { return now_; }
    Node* node(const NodeId& id);
    template <class T>
    T* node_as(const NodeId& id) {
        return dynamic_cast<T*>(node(id));
    }
    OracleLedger& ledger() { return ledger_; }

    // Virtual-time record of every Phase2A emission (activation latency and
    // ablation checks read these).
    struct SendRec {
        Time at;
        NodeId from;
        std::size_t msg_index;
        Round round;
    };
    const std::vector<SendRec>& phase2a_sends() const { return phase2a_sends_; }

  private:
    struct Hosted {
        std::unique_ptr<Node> node;
        NodeFactory factory;
        std::shared_ptr<Journal> journal;
        bool up = true;
        bool halted = false;
        DedupFilter dedup;
        std::uint64_t send_seq = 0;
    };
    struct QueuedEvent {
        enum class Kind { deliver, timer } kind;
        Envelope env;
        NodeId node;
        std::uint64_t timer_tag = 0;
    };
    struct HostAction {
        Time at;
        std::uint64_t order;
        std::function<void(SimNet&)> fire;
    };

    class SimContext;
    friend class SimContext;

    void enqueue(Time t, QueuedEvent ev);
    void post_from_node(const NodeId& from, const NodeId& to, Message m);
    void deliver(const QueuedEvent& ev);
    bool partitioned(const NodeId& a, const NodeId& b) const;
    void record(const NodeId& node, const char* kind);

    Schedule schedule_;
    bool record_events_;
    Rng rng_;
    Time now_ = 0;
    std::uint64_t enqueue_seq_ = 0;
    std::map<std::pair<Time, std::uint64_t>, QueuedEvent> queue_;
    std::vector<HostAction> host_actions_;
    std::size_t next_host_ = 0;
    std::map<NodeId, Hosted> nodes_;
    OracleLedger ledger_;
    Hasher trace_hash_;
    std::vector<TraceEvent> events_;
    std::vector<std::string> panics_;
    std::vector<SendRec> phase2a_sends_;
    std::uint64_t deliveries_ = 0;
    bool started_ = false;
};

}  // namespace matchpax
