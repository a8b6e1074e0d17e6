#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "matchpax/config.hpp"
#include "matchpax/types.hpp"

namespace matchpax {

// Round-indexed configuration history, as stored by matchmakers and carried
// in MatchB/StopB/Bootstrap. Kept sorted by round.
using ConfigHistory = std::vector<std::pair<Round, Configuration>>;

// ---- Matchmaking ----
struct MatchA {
    Round round;
    Configuration config;
};
struct MatchB {
    Round round;
    Round gc_watermark;
    ConfigHistory history;
};
struct GarbageA {
    Round round;
};
struct GarbageB {
    Round round;
};

// ---- Acceptor phases ----
struct Phase1A {
    Round round;
    Slot first_slot = 0;
};
// Per-slot vote report. `chosen` marks slots the acceptor knows were already
// chosen and persisted (Scenario 3 hint); a new leader fetches those from the
// replicas instead of re-proposing.
struct Phase1bVote {
    Round vr;
    Value vv;
    bool chosen = false;
    friend bool operator==(const Phase1bVote&, const Phase1bVote&) = default;
};
struct Phase1B {
    Round round;
    std::map<Slot, Phase1bVote> votes;
};
struct Phase2A {
    Round round;
    Slot slot = 0;
    Value value;
    bool any = false;  // Fast Paxos wildcard: vote for the first client value seen
};
struct Phase2B {
    Round round;
    Slot slot = 0;
    Value voted;  // needed by the Fast Paxos proposer; classic mode ignores it
};

// ---- Matchmaker stop / bootstrap (§ matchmaker reconfiguration) ----
struct StopA {};
struct StopB {
    ConfigHistory log;
    Round gc_watermark;
};
struct Bootstrap {
    std::uint64_t nonce = 0;
    ConfigHistory log;
    Round gc_watermark;
};
struct BootstrapAck {
    std::uint64_t nonce = 0;
};
struct Activate {
    std::uint64_t nonce = 0;
};
struct ActivateAck {
    std::uint64_t nonce = 0;
};

// The embedded single-decree Paxos over the old matchmakers that chooses the
// new matchmaker set. Same algorithm as the acceptor phases, distinct wire
// tags so the instance never mixes with command traffic. Values are node-id
// lists.
struct ReconfPhase1A {
    Round round;
};
struct ReconfPhase1B {
    Round round;
    Round vr;
    std::vector<NodeId> vv;
};
struct ReconfPhase2A {
    Round round;
    std::vector<NodeId> value;
};
struct ReconfPhase2B {
    Round round;
};

// ---- Client traffic ----
struct ClientRequest {
    std::string payload;
    NodeId client;
    std::int64_t seq = 0;
};
struct ClientReply {
    std::string payload;
    NodeId client;
    std::int64_t seq = 0;
};

// ---- Replication ----
struct Chosen {
    Slot slot = 0;
    Value value;
};
struct PrefixPersisted {
    Slot slot = kNoSlot;
};
struct WatermarkRequest {};
struct WatermarkReply {
    Slot exec_watermark = kNoSlot;
};
struct CatchupRequest {
    Slot from = 0;
    Slot to = 0;
};
struct CatchupReply {
    std::vector<std::pair<Slot, Value>> entries;
};
struct ReplayRequest {
    NodeId client;
    std::int64_t seq = 0;
};

// ---- Garbage collection hints (Scenario 3) ----
struct ChosenHint {
    Round round;
    Slot upto = kNoSlot;
};
struct ChosenHintAck {
    Round round;
    Slot upto = kNoSlot;
};

// ---- Plumbing ----
struct Nack {
    Round round;  // highest round seen by the sender
};
struct Heartbeat {
    Round round;
};
struct LeaderElect {
    Round round;
};
struct ViewChange {
    std::uint64_t version = 0;
    std::vector<NodeId> matchmakers;
};
struct RetireNotice {
    Round below;
    std::vector<NodeId> acceptors;
};

// ---- Bench event script -> cluster control ----
struct ReconfigureCmd {
    Configuration config;
};
struct MmReconfigureCmd {
    std::vector<NodeId> new_matchmakers;
};
struct ElectCmd {};

// ---- Admin ----
struct StateHashRequest {};
struct StateHashReply {
    std::uint64_t hash = 0;
};

using Message = std::variant<
    MatchA, MatchB, GarbageA, GarbageB,
    Phase1A, Phase1B, Phase2A, Phase2B,
    StopA, StopB, Bootstrap, BootstrapAck, Activate, ActivateAck,
    ReconfPhase1A, ReconfPhase1B, ReconfPhase2A, ReconfPhase2B,
    ClientRequest, ClientReply,
    Chosen, PrefixPersisted, WatermarkRequest, WatermarkReply,
    CatchupRequest, CatchupReply, ReplayRequest,
    ChosenHint, ChosenHintAck,
    Nack, Heartbeat, LeaderElect, ViewChange, RetireNotice,
    ReconfigureCmd, MmReconfigureCmd, ElectCmd,
    StateHashRequest, StateHashReply>;

// Every message travels with its sender, destination and a monotone
// per-sender sequence number used for at-most-once delivery.
struct Envelope {
    NodeId from;
    NodeId to;
    std::uint64_t seq = 0;
    Message msg;
};

const char* message_name(const Message& m);

}  // namespace matchpax
