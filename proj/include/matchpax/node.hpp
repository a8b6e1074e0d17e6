#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "matchpax/messages.hpp"

namespace matchpax {

using Time = std::int64_t;  // virtual units in the simulator, milliseconds in the runtime

// Durable storage for a node. Records use the wire codec; replaying them at
// startup restores everything a crash must not lose.
class Journal {
  public:
    virtual ~Journal() = default;
    virtual void append(const std::string& record) = 0;
    virtual std::vector<std::string> replay() = 0;
    virtual void sync() {}
};

class MemJournal : public Journal {
  public:
    void append(const std::string& record) override { records_.push_back(record); }
    std::vector<std::string> replay() override { return records_; }

  private:
    std::vector<std::string> records_;
};

// Everything a state machine may do in response to one delivered message:
// send messages, arm timers, read the clock, and report oracle-visible
// events. Hosts serialize delivery, so handlers never run concurrently.
class Context {
  public:
    virtual ~Context() = default;
    virtual Time now() const = 0;
    virtual void send(const NodeId& to, Message m) = 0;
    virtual void set_timer(Time delay, std::uint64_t tag) = 0;
    // Consistency halt: the node detected a safety violation locally. The
    // host records it and freezes the node instead of crashing the process.
    virtual void panic(const std::string& why) = 0;

    // Oracle ledger hooks, fed by the simulator host; the runtime ignores
    // them. They record ground truth (votes cast, configurations accepted,
    // values executed) independent of what any proposer concluded.
    virtual void observe(const std::string& kind, const std::string& detail) {}
    virtual void observe_vote(Slot, const Round&, const Value&) {}
    virtual void observe_mm_accept(const Round&, const Configuration&) {}
    virtual void observe_matchb(const Round&, const Round& gc_watermark, const ConfigHistory&) {}
    // Proposer-side pruned history at the end of a Matchmaking phase.
    virtual void observe_history(const Round&, const ConfigHistory&) {}
    virtual void observe_garbage_ack(const Round&) {}
    virtual void observe_phase2a(Slot, const Round&, const Value&, bool any) {}
    virtual void observe_chosen(Slot, const Round&, const Value&) {}
    virtual void observe_executed(Slot, const Value&) {}
    virtual void observe_reconf_vote(const Round&, const std::vector<NodeId>&) {}
    virtual void observe_activation(std::uint64_t nonce, const std::vector<NodeId>&) {}
};

class Node {
  public:
    explicit Node(NodeId id) : id_(std::move(id)) {}
    virtual ~Node() = default;

    const NodeId& id() const { return id_; }

    virtual void on_start(Context& ctx) {}
    virtual void on_message(const Envelope& env, Context& ctx) = 0;
    virtual void on_timer(std::uint64_t tag, Context& ctx) {}

    // Digest of protocol state. Identical message sequences through any host
    // must yield identical digests.
    virtual std::uint64_t state_hash() const = 0;

    bool panicked = false;

  protected:
    NodeId id_;
};

// At-most-once delivery filter keyed by (sender, seq). Sequence numbers are
// monotone per sender but may arrive reordered, so a bounded window of seen
// ids is kept below the high watermark.
class DedupFilter {
  public:
    bool accept(const NodeId& from, std::uint64_t seq) {
        auto& s = per_sender_[from];
        if (seq <= s.floor) return false;
        if (!s.seen.insert(seq).second) return false;
        while (s.seen.size() > kWindow) {
            s.floor = *s.seen.begin();
            s.seen.erase(s.seen.begin());
        }
        return true;
    }

  private:
    static constexpr std::size_t kWindow = 4096;
    struct PerSender {
        std::uint64_t floor = 0;
        std::set<std::uint64_t> seen;
    };
    std::unordered_map<NodeId, PerSender> per_sender_;
};

}  // namespace matchpax
