#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "matchpax/messages.hpp"

namespace matchpax {

// Ground-truth records gathered while a simulation runs: what acceptors
// actually voted, what matchmakers actually logged, what replicas actually
// executed. The safety checker works from these, not from any node's
// conclusions.
struct VoteRec {
    NodeId acceptor;
    Slot slot;
    Round round;
    Value value;
};
struct MmAcceptRec {
    NodeId mm;
    Round round;
    std::uint64_t config_digest;
    Configuration config;
};
struct MatchbRec {
    NodeId mm;
    Round round;
    Round w;
    std::vector<Round> hist_rounds;
};
struct HistoryRec {
    NodeId proposer;
    Round round;
    std::vector<Round> hist_rounds;
};
struct GarbageRec {
    NodeId mm;
    Round round;
};
struct Phase2aRec {
    NodeId proposer;
    Slot slot;
    Round round;
    Value value;
    bool any;
};
struct ChosenRec {
    NodeId by;
    Slot slot;
    Round round;
    Value value;
};
struct ExecRec {
    NodeId replica;
    Slot slot;
    Value value;
};
struct ReconfVoteRec {
    NodeId mm;
    Round round;
    std::vector<NodeId> value;
};
struct ActivationRec {
    std::uint64_t nonce;
    std::vector<NodeId> set;
};
struct PanicRec {
    NodeId node;
    std::string why;
};

using LedgerEvent = std::variant<VoteRec, MmAcceptRec, MatchbRec, HistoryRec, GarbageRec,
                                 Phase2aRec, ChosenRec, ExecRec, ReconfVoteRec, ActivationRec,
                                 PanicRec>;

struct OracleLedger {
    std::vector<LedgerEvent> events;
    int f = 1;

    template <class T>
    void add(T rec) {
        events.push_back(std::move(rec));
    }
};

struct Violation {
    std::string kind;
    std::string detail;
};

// Brute-force safety oracle. A value is chosen in slot s at round i iff some
// Phase 2 quorum of round i's configuration unanimously voted (i, v) at s.
// Violations: two chosen values in one slot; a Phase2A contradicting a value
// chosen in a lower round; replicas executing unchosen or divergent values;
// matchmakers disagreeing on a round's configuration; garbage-collected
// configurations resurfacing in later matchmaking phases; two different
// matchmaker sets chosen by one reconfiguration instance; node panics.
std::vector<Violation> check_safety(const OracleLedger& ledger);

}  // namespace matchpax
