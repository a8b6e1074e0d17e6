#include "doctest.h"
#include "matchpax/proposer.hpp"
#include "test_util.hpp"

using namespace matchpax;
using namespace matchpax::test;

namespace {

Round R(std::int64_t c, const char* o = "p1", std::int64_t s = 0) { return Round::of(c, o, s); }

Configuration cfg3(const std::string& label, const char* prefix) {
    return majority_configuration(label,
                                  {std::string(prefix) + "1", std::string(prefix) + "2",
                                   std::string(prefix) + "3"});
}

ProposerOptions opts3() {
    ProposerOptions o;
    o.matchmakers = {"m1", "m2", "m3"};
    o.f = 1;
    return o;
}

MatchB mb(const Round& r, ConfigHistory h, Round w = Round::bottom()) {
    return MatchB{r, w, std::move(h)};
}

}  // namespace

TEST_CASE("begin_round emits MatchA for the next owned round to all matchmakers") {
    ProposerNode p("p1", opts3());
    CaptureContext ctx;
    p.begin_round(Value::command("v"), cfg3("C", "a"), ctx);
    auto mas = ctx.sent<MatchA>();
    REQUIRE(mas.size() == 3);
    CHECK(mas[0].second.round == R(0, "p1", 0));
    CHECK(p.phase() == ProposerNode::Phase::matchmaking);

    // Mid-round begin is a contract violation.
    CHECK_THROWS_AS(p.begin_round(Value::command("w"), cfg3("C", "a"), ctx), std::logic_error);
}

TEST_CASE("proactive matchmaking runs without a client value") {
    ProposerNode p("p1", opts3());
    CaptureContext ctx;
    p.begin_round(std::nullopt, cfg3("C", "a"), ctx);
    CHECK(ctx.sent<MatchA>().size() == 3);
    CHECK_FALSE(p.value().has_value());

    // Empty histories: Phase 1 is vacuous, k = -1, and Phase 2 waits for the
    // client value.
    deliver(p, "m1", mb(p.round(), {}), ctx);
    deliver(p, "m2", mb(p.round(), {}), ctx);
    CHECK(p.phase() == ProposerNode::Phase::phase2);
    CHECK(p.k().is_bottom());
    CHECK(ctx.sent<Phase2A>().empty());

    ctx.clear();
    deliver(p, "c1", ClientRequest{"hello", "c1", 1}, ctx);
    auto p2as = ctx.sent<Phase2A>();
    REQUIRE(p2as.size() == 3);
    CHECK(p2as[0].second.value == Value::command("hello"));
}

TEST_CASE("on_match_b unions f+1 histories and prunes below the max watermark") {
    Configuration c0 = cfg3("C0", "a");
    Configuration c1 = cfg3("C1", "b");

    SUBCASE("union") {
        ProposerNode p("p1", opts3());
        CaptureContext ctx;
        p.begin_round(Value::command("v"), cfg3("C2", "c"), ctx);
        ctx.clear();
        deliver(p, "m1", mb(p.round(), {{R(0), c0}}), ctx);
        CHECK(p.phase() == ProposerNode::Phase::matchmaking);  // one reply is not a quorum
        deliver(p, "m2", mb(p.round(), {{R(1), c1}}), ctx);
        CHECK(p.phase() == ProposerNode::Phase::phase1);
        // Phase1A goes to every acceptor of every configuration in the union.
        auto p1as = ctx.sent<Phase1A>();
        CHECK(p1as.size() == 6);
    }
    SUBCASE("watermark pruning") {
        ProposerNode p("p1", opts3());
        CaptureContext ctx;
        p.begin_round(Value::command("v"), cfg3("C2", "c"), ctx);
        ctx.clear();
        deliver(p, "m1", mb(p.round(), {{R(0), c0}}, Round::bottom()), ctx);
        deliver(p, "m2", mb(p.round(), {{R(1), c1}}, R(1)), ctx);
        // Round 0 is pruned by the max returned watermark (1); only C1's
        // acceptors are contacted.
        auto p1as = ctx.sent<Phase1A>();
        CHECK(p1as.size() == 3);
        for (const auto& [to, m] : p1as) CHECK(to[0] == 'b');
    }
    SUBCASE("both histories empty: skip to phase 2 with k = -1") {
        ProposerNode p("p1", opts3());
        CaptureContext ctx;
        p.begin_round(Value::command("v"), cfg3("C2", "c"), ctx);
        ctx.clear();
        deliver(p, "m1", mb(p.round(), {}), ctx);
        deliver(p, "m2", mb(p.round(), {}), ctx);
        CHECK(p.phase() == ProposerNode::Phase::phase2);
        CHECK(p.k().is_bottom());
        auto p2as = ctx.sent<Phase2A>();
        REQUIRE(p2as.size() == 3);
        CHECK(p2as[0].second.value == Value::command("v"));
    }
    SUBCASE("mismatched-round replies rejected") {
        ProposerNode p("p1", opts3());
        CaptureContext ctx;
        p.begin_round(Value::command("v"), cfg3("C2", "c"), ctx);
        deliver(p, "m1", mb(R(99, "zz"), {}), ctx);
        deliver(p, "m2", mb(R(99, "zz"), {}), ctx);
        CHECK(p.phase() == ProposerNode::Phase::matchmaking);
    }
}

TEST_CASE("phase 1 completion picks the value of the largest vote round") {
    Configuration c0 = cfg3("C0", "a");

    SUBCASE("all vr = -1: propose the client value") {
        ProposerNode p("p1", opts3());
        CaptureContext ctx;
        p.begin_round(Value::command("mine"), cfg3("C1", "b"), ctx);
        deliver(p, "m1", mb(p.round(), {{R(0), c0}}), ctx);
        deliver(p, "m2", mb(p.round(), {{R(0), c0}}), ctx);
        ctx.clear();
        deliver(p, "a1", Phase1B{p.round(), {}}, ctx);
        deliver(p, "a2", Phase1B{p.round(), {}}, ctx);
        CHECK(p.phase() == ProposerNode::Phase::phase2);
        auto p2as = ctx.sent<Phase2A>();
        REQUIRE(p2as.size() == 3);
        CHECK(p2as[0].second.value == Value::command("mine"));
        for (const auto& [to, m] : p2as) CHECK(to[0] == 'b');
    }
    SUBCASE("votes at rounds 1 and 0: propose the round-1 value") {
        ProposerNode p("p1", opts3());
        CaptureContext ctx;
        p.begin_round(Value::command("mine"), cfg3("C1", "b"), ctx);
        deliver(p, "m1", mb(p.round(), {{R(0), c0}}), ctx);
        deliver(p, "m2", mb(p.round(), {{R(0), c0}}), ctx);
        ctx.clear();
        Phase1B b1{p.round(), {}};
        b1.votes[0] = Phase1bVote{R(1, "q"), Value::command("v"), false};
        Phase1B b2{p.round(), {}};
        b2.votes[0] = Phase1bVote{R(0, "q"), Value::command("u"), false};
        deliver(p, "a1", b1, ctx);
        deliver(p, "a2", b2, ctx);
        auto p2as = ctx.sent<Phase2A>();
        REQUIRE(p2as.size() == 3);
        CHECK(p2as[0].second.value == Value::command("v"));
        CHECK(p.k() == R(1, "q"));
    }
}

TEST_CASE("round pruning (opt 4) releases configurations below k") {
    Configuration c0 = cfg3("C0", "a");
    Configuration c1 = cfg3("C1", "b");
    ConfigHistory h = {{R(0, "q"), c0}, {R(1, "q"), c1}};

    auto run = [&](bool pruning) {
        ProposerOptions o = opts3();
        o.round_pruning = pruning;
        ProposerNode p("p1", o);
        CaptureContext ctx;
        p.begin_round(Value::command("mine"), cfg3("C2", "c"), ctx);
        deliver(p, "m1", mb(p.round(), h), ctx);
        deliver(p, "m2", mb(p.round(), h), ctx);
        ctx.clear();
        // Only C1's quorum responds, reporting a vote at round 1.
        Phase1B b{p.round(), {}};
        b.votes[0] = Phase1bVote{R(1, "q"), Value::command("w"), false};
        deliver(p, "b1", b, ctx);
        deliver(p, "b2", b, ctx);
        return std::pair{p.phase(), ctx.sent<Phase2A>().size()};
    };

    auto [phase_with, sends_with] = run(true);
    CHECK(phase_with == ProposerNode::Phase::phase2);
    CHECK(sends_with == 3);

    auto [phase_without, sends_without] = run(false);
    CHECK(phase_without == ProposerNode::Phase::phase1);  // still waiting on C0
    CHECK(sends_without == 0);
}

TEST_CASE("phase 2 quorum chooses; duplicate Phase2B counted once") {
    ProposerNode p("p1", opts3());
    CaptureContext ctx;
    p.begin_round(Value::command("v"), cfg3("C", "b"), ctx);
    deliver(p, "m1", mb(p.round(), {}), ctx);
    deliver(p, "m2", mb(p.round(), {}), ctx);
    ctx.clear();

    deliver(p, "b1", Phase2B{p.round(), 0, Value::command("v")}, ctx);
    CHECK(p.phase() == ProposerNode::Phase::phase2);  // {b1} is not a quorum
    deliver(p, "b1", Phase2B{p.round(), 0, Value::command("v")}, ctx);
    CHECK(p.phase() == ProposerNode::Phase::phase2);  // duplicate does not count
    deliver(p, "b2", Phase2B{p.round(), 0, Value::command("v")}, ctx);
    CHECK(p.phase() == ProposerNode::Phase::chosen);
    CHECK(p.chosen_value() == Value::command("v"));
}

TEST_CASE("gc guard matrix") {
    SUBCASE("scenario 1: after chosen") {
        ProposerNode p("p1", opts3());
        CaptureContext ctx;
        p.begin_round(Value::command("v"), cfg3("C", "b"), ctx);
        deliver(p, "m1", mb(p.round(), {}), ctx);
        deliver(p, "m2", mb(p.round(), {}), ctx);
        deliver(p, "b1", Phase2B{p.round(), 0, Value::command("v")}, ctx);
        deliver(p, "b2", Phase2B{p.round(), 0, Value::command("v")}, ctx);
        REQUIRE(p.phase() == ProposerNode::Phase::chosen);
        CHECK(p.gc_scenario() == 1);
        ctx.clear();
        CHECK(p.maybe_issue_gc(ctx) == GcIssue::sent);
        CHECK(ctx.sent<GarbageA>().size() == 3);
        // f+1 GarbageB acks confirm the prefix is collectable.
        deliver(p, "m1", GarbageB{p.round()}, ctx);
        CHECK_FALSE(p.gc_acknowledged());
        deliver(p, "m2", GarbageB{p.round()}, ctx);
        CHECK(p.gc_acknowledged());
    }
    SUBCASE("scenario 2: k = -1 after phase 1") {
        Configuration c0 = cfg3("C0", "a");
        ProposerNode p("p1", opts3());
        CaptureContext ctx;
        p.begin_round(Value::command("v"), cfg3("C", "b"), ctx);
        deliver(p, "m1", mb(p.round(), {{R(0, "q"), c0}}), ctx);
        deliver(p, "m2", mb(p.round(), {{R(0, "q"), c0}}), ctx);
        deliver(p, "a1", Phase1B{p.round(), {}}, ctx);
        deliver(p, "a2", Phase1B{p.round(), {}}, ctx);
        REQUIRE(p.phase() == ProposerNode::Phase::phase2);
        CHECK(p.gc_scenario() == 2);
        ctx.clear();
        CHECK(p.maybe_issue_gc(ctx) == GcIssue::sent);
        CHECK(ctx.sent<GarbageA>().size() == 3);
    }
    SUBCASE("premature call is an error, never silently sent") {
        Configuration c0 = cfg3("C0", "a");
        ProposerNode p("p1", opts3());
        CaptureContext ctx;
        p.begin_round(Value::command("v"), cfg3("C", "b"), ctx);
        deliver(p, "m1", mb(p.round(), {{R(0, "q"), c0}}), ctx);
        deliver(p, "m2", mb(p.round(), {{R(0, "q"), c0}}), ctx);
        // Phase 1 in progress with a recorded vote: no scenario holds.
        Phase1B b{p.round(), {}};
        b.votes[0] = Phase1bVote{R(0, "q"), Value::command("other"), false};
        deliver(p, "a1", b, ctx);
        REQUIRE(p.phase() == ProposerNode::Phase::phase1);
        ctx.clear();
        CHECK(p.maybe_issue_gc(ctx) == GcIssue::no_scenario_error);
        CHECK(ctx.sent<GarbageA>().empty());
    }
    SUBCASE("scenario 3: replicated value plus hint quorum") {
        // Phase 1 finds an existing vote (k != -1), so neither scenario 1 nor
        // 2 holds while the proposal is in flight.
        Configuration c0 = cfg3("C0", "a");
        ProposerNode p("p1", opts3());
        CaptureContext ctx;
        p.begin_round(Value::command("v"), cfg3("C", "b"), ctx);
        deliver(p, "m1", mb(p.round(), {{R(0, "q"), c0}}), ctx);
        deliver(p, "m2", mb(p.round(), {{R(0, "q"), c0}}), ctx);
        Phase1B b{p.round(), {}};
        b.votes[0] = Phase1bVote{R(0, "q"), Value::command("old"), false};
        deliver(p, "a1", b, ctx);
        deliver(p, "a2", b, ctx);
        REQUIRE(p.phase() == ProposerNode::Phase::phase2);
        CHECK(p.gc_scenario() == 0);

        p.note_chosen_replicated();
        CHECK(p.gc_scenario() == 0);  // still missing the hint quorum
        deliver(p, "b1", ChosenHintAck{p.round(), 0}, ctx);
        CHECK(p.gc_scenario() == 0);
        deliver(p, "b2", ChosenHintAck{p.round(), 0}, ctx);
        CHECK(p.gc_scenario() == 3);
        ctx.clear();
        CHECK(p.maybe_issue_gc(ctx) == GcIssue::sent);
        CHECK(ctx.sent<GarbageA>().size() == 3);
    }
}

TEST_CASE("nack abandons the round and retries in a larger owned round") {
    ProposerNode p("p1", opts3());
    CaptureContext ctx;
    p.begin_round(Value::command("v"), cfg3("C", "b"), ctx);
    CHECK(p.round() == R(0, "p1", 0));
    ctx.clear();
    deliver(p, "m1", Nack{R(5, "p2", 0)}, ctx);
    CHECK(p.phase() == ProposerNode::Phase::idle);
    REQUIRE(ctx.timers.size() == 1);
    p.on_timer(ctx.timers[0].second, ctx);
    CHECK(p.phase() == ProposerNode::Phase::matchmaking);
    CHECK(p.round().counter == 6);
    CHECK(p.round().owner == "p1");
}

TEST_CASE("phase 1 bypassing carries facts into the successor round") {
    ProposerNode p("p1", opts3());
    CaptureContext ctx;
    p.begin_round(Value::command("v"), cfg3("C", "b"), ctx);
    deliver(p, "m1", mb(p.round(), {}), ctx);
    deliver(p, "m2", mb(p.round(), {}), ctx);
    REQUIRE(p.phase() == ProposerNode::Phase::phase2);
    Round first = p.round();

    ctx.clear();
    p.advance_bypassed(cfg3("C'", "d"), ctx);
    CHECK(p.round() == round_successor(first));
    CHECK(ctx.sent<MatchA>().size() == 3);

    ctx.clear();
    deliver(p, "m1", mb(p.round(), {{first, cfg3("C", "b")}}), ctx);
    deliver(p, "m3", mb(p.round(), {{first, cfg3("C", "b")}}), ctx);
    // No Phase1A: phase 1 was bypassed; Phase2A goes straight to the new
    // configuration with the same value.
    CHECK(ctx.sent<Phase1A>().empty());
    auto p2as = ctx.sent<Phase2A>();
    REQUIRE(p2as.size() == 3);
    CHECK(p2as[0].second.value == Value::command("v"));
    for (const auto& [to, m] : p2as) CHECK(to[0] == 'd');

    // Bypass without facts is a contract violation.
    ProposerNode q("q1", opts3());
    CHECK_THROWS_AS(q.advance_bypassed(cfg3("C", "b"), ctx), std::logic_error);
}

TEST_CASE("fast paxos proposer branches (k=-1, singleton V, conflicting V)") {
    ProposerOptions o;
    o.matchmakers = {"m1", "m2", "m3"};
    o.f = 1;
    o.fast = true;
    // f+1 = 2 acceptors, singleton Phase 1 quorums, one unanimous Phase 2 quorum.
    Configuration c;
    c.label = "F";
    c.acceptors = {"a1", "a2"};
    c.phase1_quorums = {{"a1"}, {"a2"}};
    c.phase2_quorums = {{"a1", "a2"}};
    REQUIRE(validate_configuration(c).empty());

    SUBCASE("k = -1 proposes any") {
        ProposerNode p("p1", o);
        CaptureContext ctx;
        p.begin_round(std::nullopt, c, ctx);
        ctx.clear();
        deliver(p, "m1", mb(p.round(), {}), ctx);
        deliver(p, "m2", mb(p.round(), {}), ctx);
        auto p2as = ctx.sent<Phase2A>();
        REQUIRE(p2as.size() == 2);
        CHECK(p2as[0].second.any);
    }
    SUBCASE("V = {v} proposes v; unanimous quorum chooses") {
        ProposerNode p("p1", o);
        CaptureContext ctx;
        p.begin_round(std::nullopt, c, ctx);
        deliver(p, "m1", mb(p.round(), {{R(0, "q"), c}}), ctx);
        deliver(p, "m2", mb(p.round(), {{R(0, "q"), c}}), ctx);
        ctx.clear();
        Phase1B b1{p.round(), {}};
        b1.votes[0] = Phase1bVote{R(0, "q"), Value::command("v"), false};
        deliver(p, "a1", b1, ctx);
        deliver(p, "a2", Phase1B{p.round(), {}}, ctx);
        auto p2as = ctx.sent<Phase2A>();
        REQUIRE(p2as.size() == 2);
        CHECK_FALSE(p2as[0].second.any);
        CHECK(p2as[0].second.value == Value::command("v"));

        deliver(p, "a1", Phase2B{p.round(), 0, Value::command("v")}, ctx);
        CHECK_FALSE(p.chosen());  // unanimity required
        deliver(p, "a2", Phase2B{p.round(), 0, Value::command("v")}, ctx);
        CHECK(p.chosen());
    }
    SUBCASE("conflicting V proposes any; split votes never choose") {
        // Two prior single-acceptor configurations force Phase 1 to hear from
        // both acceptors, exposing the split round-0 votes.
        Configuration ca{"A", {"a1"}, {{"a1"}}, {{"a1"}}};
        Configuration cb{"B", {"a2"}, {{"a2"}}, {{"a2"}}};
        ProposerNode p("p1", o);
        CaptureContext ctx;
        p.begin_round(std::nullopt, c, ctx);
        deliver(p, "m1", mb(p.round(), {{R(0, "q", 0), ca}, {R(0, "q", 1), cb}}), ctx);
        deliver(p, "m2", mb(p.round(), {{R(0, "q", 0), ca}, {R(0, "q", 1), cb}}), ctx);
        ctx.clear();
        Phase1B b1{p.round(), {}};
        b1.votes[0] = Phase1bVote{R(0, "q"), Value::command("v"), false};
        Phase1B b2{p.round(), {}};
        b2.votes[0] = Phase1bVote{R(0, "q"), Value::command("w"), false};
        deliver(p, "a1", b1, ctx);
        deliver(p, "a2", b2, ctx);
        auto p2as = ctx.sent<Phase2A>();
        REQUIRE(p2as.size() == 2);
        CHECK(p2as[0].second.any);

        // The acceptors vote for different client values in this round;
        // no value reaches a unanimous vote.
        deliver(p, "a1", Phase2B{p.round(), 0, Value::command("x")}, ctx);
        deliver(p, "a2", Phase2B{p.round(), 0, Value::command("y")}, ctx);
        CHECK_FALSE(p.chosen());
    }
}
