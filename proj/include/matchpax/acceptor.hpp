#pragma once

#include <map>
#include <memory>

#include "matchpax/node.hpp"

namespace matchpax {

struct AcceptorOptions {
    // Journal every state change before replying (fail-restart durability).
    bool journal_enabled = true;
    // Seeded bug for mutant testing: drop the i >= r guard so the acceptor
    // votes in rounds below its promise. Never set outside tests.
    bool unsafe_accept_lower_rounds = false;
};

// Acceptor state machine, one promised round spanning all slots and one vote
// per slot, overwritable only by rounds >= the promise.
class AcceptorNode : public Node {
  public:
    AcceptorNode(NodeId id, std::shared_ptr<Journal> journal, AcceptorOptions opts = {});

    void on_start(Context& ctx) override;
    void on_message(const Envelope& env, Context& ctx) override;
    std::uint64_t state_hash() const override;

    const Round& promised() const { return promised_; }
    const std::map<Slot, std::pair<Round, Value>>& votes() const { return votes_; }
    Slot hinted_upto() const { return hinted_upto_; }

  private:
    void handle_phase1a(const NodeId& from, const Phase1A& m, Context& ctx);
    void handle_phase2a(const NodeId& from, const Phase2A& m, Context& ctx);
    void handle_client(const ClientRequest& m, Context& ctx);
    void handle_hint(const NodeId& from, const ChosenHint& m, Context& ctx);
    void record_promise(const Round& r);
    void record_vote(Slot s, const Round& r, const Value& v);
    void record_hint(Slot upto);
    void record_any(const Round& r, const NodeId& owner);

    Round promised_;
    std::map<Slot, std::pair<Round, Value>> votes_;
    Slot hinted_upto_ = kNoSlot;  // chosen hints cover the prefix [0, hinted_upto_]
    Round any_round_;             // Fast Paxos wildcard authorization, if any
    NodeId any_owner_;
    std::shared_ptr<Journal> journal_;
    AcceptorOptions opts_;
};

}  // namespace matchpax
