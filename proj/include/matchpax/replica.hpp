#pragma once

#include <map>
#include <memory>
#include <optional>

#include "matchpax/node.hpp"

namespace matchpax {

// Client commands travel inside Value payloads so replicas know whom to
// answer: (client, seq, op).
struct Command {
    NodeId client;
    std::int64_t seq = 0;
    std::string op;
};
std::string encode_command(const Command& c);
std::optional<Command> decode_command(const std::string& payload);

// Deterministic application state machine.
class App {
  public:
    virtual ~App() = default;
    virtual std::string apply(const std::string& op) = 0;
    virtual void digest(Hasher& h) const = 0;
};

// The paper-style one byte no-op machine: every command returns "ok".
class NoopApp : public App {
  public:
    std::string apply(const std::string&) override { return "ok"; }
    void digest(Hasher& h) const override { h.u64(0); }
};

// Tiny register map: "set <k> <v>" / "get <k>" / anything else echoes.
class KvApp : public App {
  public:
    std::string apply(const std::string& op) override;
    void digest(Hasher& h) const override;

  private:
    std::map<std::string, std::string> kv_;
};

struct ReplicaOptions {
    std::vector<NodeId> replicas;  // peer replicas, for hole catch-up
    int index = 0;                 // designated responder when slot % count == index
    bool journal_enabled = true;
    std::string app = "noop";  // "noop" | "kv"
    Time gap_interval = 60;
};

// Executes chosen commands in prefix order, answers clients, and
// acknowledges prefix persistence for GC Scenario 3.
class ReplicaNode : public Node {
  public:
    ReplicaNode(NodeId id, std::shared_ptr<Journal> journal, ReplicaOptions opts = {});

    void on_start(Context& ctx) override;
    void on_message(const Envelope& env, Context& ctx) override;
    void on_timer(std::uint64_t tag, Context& ctx) override;
    std::uint64_t state_hash() const override;

    Slot exec_watermark() const { return exec_watermark_; }
    const std::map<Slot, Value>& log() const { return log_; }

  private:
    void store_chosen(Slot s, const Value& v, Context& ctx, bool quiet);
    void execute_prefix(Context& ctx, bool quiet);
    bool designated(Slot s) const;

    std::map<Slot, Value> log_;
    Slot exec_watermark_ = kNoSlot;
    std::unique_ptr<App> app_;
    std::map<NodeId, std::pair<std::int64_t, std::string>> reply_cache_;
    NodeId leader_;  // sender of the latest Chosen; receives PrefixPersisted
    std::shared_ptr<Journal> journal_;
    ReplicaOptions opts_;
    std::size_t gap_peer_ = 0;
};

}  // namespace matchpax
