#include <cstdio>

#include "doctest.h"
#include "matchpax/codec.hpp"

using namespace matchpax;

namespace {

Round R(std::int64_t c, const char* o = "a", std::int64_t s = 0) { return Round::of(c, o, s); }

Configuration small_cfg() { return majority_configuration("C", {"a1", "a2", "a3"}); }

std::string hex(const std::string& s) {
    static const char* d = "0123456789abcdef";
    std::string out;
    for (unsigned char c : s) {
        out.push_back(d[c >> 4]);
        out.push_back(d[c & 0xf]);
    }
    return out;
}

// One representative of every message constructor, with non-default fields.
std::vector<Message> all_messages() {
    Configuration c = small_cfg();
    ConfigHistory h = {{R(0), c}, {R(2, "b"), c}};
    Phase1B p1b{R(3), {}};
    p1b.votes[2] = Phase1bVote{R(1), Value::command("x"), false};
    p1b.votes[5] = Phase1bVote{Round::bottom(), Value::no_op(), true};
    return {
        MatchA{R(1, "a", 2), c},
        MatchB{R(2), R(1), h},
        GarbageA{R(4)},
        GarbageB{R(4)},
        Phase1A{R(3), 7},
        p1b,
        Phase2A{R(3), 9, Value::command("cmd"), false},
        Phase2B{R(3), 9, Value::command("cmd")},
        StopA{},
        StopB{h, R(1)},
        Bootstrap{42, h, R(1)},
        BootstrapAck{42},
        Activate{42},
        ActivateAck{42},
        ReconfPhase1A{R(5, "d")},
        ReconfPhase1B{R(5, "d"), R(2, "d"), {"m1", "m2"}},
        ReconfPhase2A{R(5, "d"), {"m4", "m5", "m6"}},
        ReconfPhase2B{R(5, "d")},
        ClientRequest{"payload", "c1", 3},
        ClientReply{"result", "c1", 3},
        Chosen{11, Value::command("v")},
        PrefixPersisted{11},
        WatermarkRequest{},
        WatermarkReply{10},
        CatchupRequest{3, 9},
        CatchupReply{{{3, Value::command("a")}, {4, Value::no_op()}}},
        ReplayRequest{"c1", 2},
        ChosenHint{R(3), 11},
        ChosenHintAck{R(3), 11},
        Nack{R(6, "q")},
        Heartbeat{R(6, "q")},
        LeaderElect{R(6, "q")},
        ViewChange{3, {"m1", "m2", "m3"}},
        RetireNotice{R(6, "q"), {"a1", "a2"}},
        ReconfigureCmd{c},
        MmReconfigureCmd{{"m4", "m5", "m6"}},
        ElectCmd{},
        StateHashRequest{},
        StateHashReply{0xdeadbeef},
    };
}

}  // namespace

TEST_CASE("encode/decode roundtrip identity for every constructor") {
    std::uint64_t seq = 100;
    for (const auto& m : all_messages()) {
        Envelope env{"n1", "n2", seq++, m};
        std::string bytes = encode_envelope(env);
        CHECK(frame_size(bytes.data(), bytes.size()) == static_cast<std::int64_t>(bytes.size()));
        auto res = decode_envelope(bytes);
        REQUIRE_MESSAGE(res.ok(), message_name(m) << ": " << decode_error_name(res.error));
        CHECK(res.envelope.from == "n1");
        CHECK(res.envelope.to == "n2");
        CHECK(res.envelope.seq == env.seq);
        CHECK(res.envelope.msg.index() == m.index());
        CHECK(encode_message(res.envelope.msg) == encode_message(m));
    }
}

TEST_CASE("encoding is canonical (bitwise deterministic)") {
    for (const auto& m : all_messages()) {
        Envelope env{"n1", "n2", 7, m};
        CHECK(encode_envelope(env) == encode_envelope(env));
    }
}

TEST_CASE("golden frame bytes: Phase2B((0,a,0), slot 0)") {
    Envelope env{"p1", "a1", 1, Phase2B{R(0, "a", 0), 0, Value::no_op()}};
    std::string got = hex(encode_envelope(env));
    // Frozen from the canonical encoder; any codec change must be deliberate
    // and bump the wire version.
    const std::string want =
        "4d505831"  // magic "MPX1"
        "01"        // version
        "07"        // tag Phase2B
        "020000007031"
        "020000006131"
        "0100000000000000"
        "22000000"
        "0000000000000000"
        "0100000061"
        "0000000000000000"
        "0000000000000000"
        "00"
        "00000000";
    CHECK(got == want);
}

TEST_CASE("golden frame bytes: MatchA((0,a,1), majority C)") {
    Envelope env{"p1", "m1", 2, MatchA{R(0, "a", 1), small_cfg()}};
    std::uint64_t digest = message_digest(env.msg);
    CHECK(digest == 0x324f79c095a81122ull);
}

TEST_CASE("decode errors are typed") {
    Envelope env{"p1", "a1", 1, Phase2B{R(0), 0, Value::no_op()}};
    std::string bytes = encode_envelope(env);

    SUBCASE("truncated") {
        for (std::size_t cut : {std::size_t(3), bytes.size() / 2, bytes.size() - 1}) {
            auto res = decode_envelope(bytes.substr(0, cut));
            CHECK_FALSE(res.ok());
            CHECK((res.error == DecodeError::truncated || res.error == DecodeError::bad_magic));
        }
    }
    SUBCASE("bad magic") {
        std::string b = bytes;
        b[0] = 'X';
        CHECK(decode_envelope(b).error == DecodeError::bad_magic);
        CHECK(frame_size(b.data(), b.size()) == -1);
    }
    SUBCASE("flipped version byte") {
        std::string b = bytes;
        b[4] = static_cast<char>(kWireVersion + 1);
        CHECK(decode_envelope(b).error == DecodeError::bad_version);
    }
    SUBCASE("unknown tag") {
        std::string b = bytes;
        b[5] = static_cast<char>(200);
        CHECK(decode_envelope(b).error == DecodeError::unknown_tag);
    }
    SUBCASE("trailing bytes") {
        std::string b = bytes + "junk";
        CHECK_FALSE(decode_envelope(b).ok());
    }
}

TEST_CASE("frame_size handles partial headers") {
    Envelope env{"p1", "a1", 1, StopA{}};
    std::string bytes = encode_envelope(env);
    for (std::size_t n = 0; n < bytes.size(); ++n) {
        auto sz = frame_size(bytes.data(), n);
        if (n < 4) {
            CHECK(sz == 0);
        } else {
            CHECK((sz == 0 || sz == static_cast<std::int64_t>(bytes.size())));
        }
    }
}
