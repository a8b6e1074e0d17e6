#pragma once

#include <map>

#include "matchpax/node.hpp"

namespace matchpax {

struct ClientOptions {
    std::vector<NodeId> proposers;
    NodeId leader_hint;
    std::string op = "noop";
    Time start_at = 0;
    Time timeout = 200;   // resend + rotate to the next proposer
    Time metronome = 0;   // 0 = closed loop; otherwise send every `metronome`
    std::int64_t max_requests = 0;  // 0 = unbounded
};

// Closed-loop (or metronome) workload driver: proposes a command, waits for
// the response, and immediately proposes another.
class ClientNode : public Node {
  public:
    struct Sample {
        std::int64_t seq;
        Time sent;
        Time replied;
    };

    ClientNode(NodeId id, ClientOptions opts);

    void on_start(Context& ctx) override;
    void on_message(const Envelope& env, Context& ctx) override;
    void on_timer(std::uint64_t tag, Context& ctx) override;
    std::uint64_t state_hash() const override;

    const std::vector<Sample>& samples() const { return samples_; }
    std::int64_t completed() const { return static_cast<std::int64_t>(samples_.size()); }

  private:
    void send_request(Context& ctx, std::int64_t seq);
    void next_request(Context& ctx);

    ClientOptions opts_;
    std::int64_t next_seq_ = 0;
    std::map<std::int64_t, Time> inflight_;  // seq -> first send time
    Time last_activity_ = 0;
    std::size_t hint_ = 0;
    std::vector<Sample> samples_;
    bool stopped_ = false;
};

}  // namespace matchpax
