#include "doctest.h"
#include "matchpax/matchmaker.hpp"
#include "test_util.hpp"

using namespace matchpax;
using namespace matchpax::test;

namespace {

Configuration cfg(const std::string& label) {
    return majority_configuration(label, {"x1_" + label, "x2_" + label, "x3_" + label});
}

Round R(std::int64_t c) { return Round::of(c, "p", 0); }

MatchmakerNode fresh(const char* id = "m1") {
    return MatchmakerNode(id, std::make_shared<MemJournal>());
}

}  // namespace

TEST_CASE("matchmaker log over time (insert, history, ignore)") {
    auto m = fresh();
    CaptureContext ctx;

    deliver(m, "p", MatchA{R(0), cfg("C0")}, ctx);
    auto mbs = ctx.sent<MatchB>();
    REQUIRE(mbs.size() == 1);
    CHECK(mbs[0].second.round == R(0));
    CHECK(mbs[0].second.gc_watermark.is_bottom());
    CHECK(mbs[0].second.history.empty());

    ctx.clear();
    deliver(m, "p", MatchA{R(2), cfg("C2")}, ctx);
    mbs = ctx.sent<MatchB>();
    REQUIRE(mbs.size() == 1);
    REQUIRE(mbs[0].second.history.size() == 1);
    CHECK(mbs[0].second.history[0].first == R(0));
    CHECK(mbs[0].second.history[0].second.label == "C0");

    ctx.clear();
    deliver(m, "p", MatchA{R(3), cfg("C3")}, ctx);
    mbs = ctx.sent<MatchB>();
    REQUIRE(mbs.size() == 1);
    REQUIRE(mbs[0].second.history.size() == 2);
    CHECK(mbs[0].second.history[0].first == R(0));
    CHECK(mbs[0].second.history[1].first == R(2));

    // A MatchA for round 1 is now ignored (nacked, not answered).
    ctx.clear();
    deliver(m, "p", MatchA{R(1), cfg("C1")}, ctx);
    CHECK(ctx.sent<MatchB>().empty());
    REQUIRE(ctx.sent<Nack>().size() == 1);
    CHECK(ctx.sent<Nack>()[0].second.round == R(3));
    CHECK(m.log().size() == 3);
}

TEST_CASE("matchmaker monotonicity: emitted MatchB rounds strictly increase") {
    auto m = fresh();
    CaptureContext ctx;
    Rng rng(11);
    Round last = Round::bottom();
    for (int i = 0; i < 300; ++i) {
        Round r = Round::of(rng.range(0, 40), rng.chance_pct(50) ? "p" : "q", rng.range(0, 3));
        ctx.clear();
        deliver(m, "p", MatchA{r, cfg("C")}, ctx);
        auto mbs = ctx.sent<MatchB>();
        if (!mbs.empty()) {
            CHECK(last < r);
            // History is exactly the logged rounds below r at reply time.
            for (const auto& [hr, hc] : mbs[0].second.history) CHECK(hr < r);
            last = r;
        }
    }
}

TEST_CASE("garbage collection deletes the prefix and raises the watermark") {
    auto m = fresh();
    CaptureContext ctx;
    deliver(m, "p", MatchA{R(0), cfg("C0")}, ctx);
    deliver(m, "p", MatchA{R(2), cfg("C2")}, ctx);
    ctx.clear();

    deliver(m, "p", GarbageA{R(2)}, ctx);
    REQUIRE(ctx.sent<GarbageB>().size() == 1);
    CHECK(ctx.sent<GarbageB>()[0].second.round == R(2));
    CHECK(m.log().size() == 1);
    CHECK(m.log().count(R(2)) == 1);
    CHECK(m.gc_watermark() == R(2));

    // Lower GarbageA: idempotent ack, watermark keeps its max.
    ctx.clear();
    deliver(m, "p", GarbageA{R(1)}, ctx);
    REQUIRE(ctx.sent<GarbageB>().size() == 1);
    CHECK(ctx.sent<GarbageB>()[0].second.round == R(1));
    CHECK(m.gc_watermark() == R(2));
    CHECK(m.log().size() == 1);

    // Applying the same GarbageA twice leaves the same state (replay oracle:
    // state digests equal), and acks both times.
    std::uint64_t before = 0;
    {
        auto m2 = fresh("m2");
        CaptureContext c2;
        deliver(m2, "p", MatchA{R(0), cfg("C0")}, c2);
        deliver(m2, "p", GarbageA{R(3)}, c2);
        before = m2.state_hash();
        c2.clear();
        deliver(m2, "p", GarbageA{R(3)}, c2);
        CHECK(m2.state_hash() == before);
        CHECK(c2.sent<GarbageB>().size() == 1);
    }

    // New MatchA below the watermark is refused.
    ctx.clear();
    deliver(m, "p", MatchA{R(1), cfg("C1")}, ctx);
    CHECK(ctx.sent<MatchB>().empty());
    CHECK(ctx.sent<Nack>().size() == 1);

    // MatchB carries the watermark.
    ctx.clear();
    deliver(m, "p", MatchA{R(5), cfg("C5")}, ctx);
    REQUIRE(ctx.sent<MatchB>().size() == 1);
    CHECK(ctx.sent<MatchB>()[0].second.gc_watermark == R(2));
}

TEST_CASE("stop freezes the matchmaker and re-sends the same StopB") {
    auto m = fresh();
    CaptureContext ctx;
    deliver(m, "p", MatchA{R(0), cfg("C0")}, ctx);
    ctx.clear();

    deliver(m, "d", StopA{}, ctx);
    auto sbs = ctx.sent<StopB>();
    REQUIRE(sbs.size() == 1);
    REQUIRE(sbs[0].second.log.size() == 1);
    CHECK(sbs[0].second.log[0].first == R(0));
    CHECK(sbs[0].second.gc_watermark.is_bottom());

    std::uint64_t frozen = m.state_hash();
    ctx.clear();
    deliver(m, "p", MatchA{R(5), cfg("C5")}, ctx);
    CHECK(ctx.sends.empty());  // ignored silently; caller retries elsewhere
    deliver(m, "p", GarbageA{R(5)}, ctx);
    CHECK(ctx.sends.empty());
    CHECK(m.state_hash() == frozen);

    // Second StopA returns an identical StopB.
    ctx.clear();
    deliver(m, "d", StopA{}, ctx);
    auto sbs2 = ctx.sent<StopB>();
    REQUIRE(sbs2.size() == 1);
    CHECK(sbs2[0].second.log == sbs[0].second.log);
    CHECK(sbs2[0].second.gc_watermark == sbs[0].second.gc_watermark);
    CHECK(m.state_hash() == frozen);
}

TEST_CASE("stop on a fresh matchmaker returns an empty StopB") {
    auto m = fresh();
    CaptureContext ctx;
    deliver(m, "d", StopA{}, ctx);
    auto sbs = ctx.sent<StopB>();
    REQUIRE(sbs.size() == 1);
    CHECK(sbs[0].second.log.empty());
    CHECK(sbs[0].second.gc_watermark.is_bottom());
}

TEST_CASE("bootstrap adopts merged state and activation gates processing") {
    MatchmakerOptions opts;
    opts.starts_active = false;
    MatchmakerNode m("m9", std::make_shared<MemJournal>(), opts);
    CaptureContext ctx;

    // Inactive: MatchA ignored.
    deliver(m, "p", MatchA{R(5), cfg("C5")}, ctx);
    CHECK(ctx.sends.empty());

    ConfigHistory log;
    log.emplace_back(R(2), cfg("C2"));
    log.emplace_back(R(4), cfg("C4"));
    deliver(m, "d", Bootstrap{77, log, R(2)}, ctx);
    REQUIRE(ctx.sent<BootstrapAck>().size() == 1);
    CHECK(ctx.sent<BootstrapAck>()[0].second.nonce == 77);

    // Still inactive until the activation notice.
    ctx.clear();
    deliver(m, "p", MatchA{R(5), cfg("C5")}, ctx);
    CHECK(ctx.sends.empty());

    // Activation with the wrong nonce is ignored.
    deliver(m, "d2", Activate{78}, ctx);
    CHECK(m.active() == false);
    deliver(m, "d", Activate{77}, ctx);
    CHECK(m.active());

    ctx.clear();
    deliver(m, "p", MatchA{R(5), cfg("C5")}, ctx);
    auto mbs = ctx.sent<MatchB>();
    REQUIRE(mbs.size() == 1);
    CHECK(mbs[0].second.gc_watermark == R(2));
    REQUIRE(mbs[0].second.history.size() == 2);
    CHECK(mbs[0].second.history[0].first == R(2));
    CHECK(mbs[0].second.history[1].first == R(4));

    // The bootstrapped watermark still refuses low rounds.
    ctx.clear();
    deliver(m, "p", MatchA{R(1), cfg("C1")}, ctx);
    CHECK(ctx.sent<MatchB>().empty());
}

TEST_CASE("identity bootstrap behaves like a fresh matchmaker") {
    MatchmakerOptions opts;
    opts.starts_active = false;
    MatchmakerNode m("mb", std::make_shared<MemJournal>(), opts);
    CaptureContext ctx;
    deliver(m, "d", Bootstrap{1, {}, Round::bottom()}, ctx);
    deliver(m, "d", Activate{1}, ctx);

    auto f = fresh();
    CaptureContext ctx2;
    deliver(m, "p", MatchA{R(0), cfg("C0")}, ctx);
    deliver(f, "p", MatchA{R(0), cfg("C0")}, ctx2);
    CHECK(m.log() == f.log());
    CHECK(m.gc_watermark() == f.gc_watermark());
}

TEST_CASE("matchmaker journal replay restores promises across restart") {
    auto journal = std::make_shared<MemJournal>();
    CaptureContext ctx;
    {
        MatchmakerNode m("mj", journal);
        m.on_start(ctx);
        deliver(m, "p", MatchA{R(0), cfg("C0")}, ctx);
        deliver(m, "p", MatchA{R(2), cfg("C2")}, ctx);
        deliver(m, "p", GarbageA{R(2)}, ctx);
    }
    MatchmakerNode m2("mj", journal);
    m2.on_start(ctx);
    CHECK(m2.gc_watermark() == R(2));
    REQUIRE(m2.log().size() == 1);
    CHECK(m2.log().count(R(2)) == 1);

    // The restarted matchmaker keeps refusing rounds below its promises.
    ctx.clear();
    deliver(m2, "p", MatchA{R(1), cfg("C1")}, ctx);
    CHECK(ctx.sent<MatchB>().empty());
}
