#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace matchpax {

// Node identifiers are short role-prefixed strings ("p1", "a3", "m2", ...).
using NodeId = std::string;
using ProposerId = NodeId;

// Log entry index. -1 is the "nothing yet" watermark sentinel.
using Slot = std::int64_t;
inline constexpr Slot kNoSlot = -1;

// A round (ballot) is a lexicographically ordered (counter, owner, sub)
// tuple owned by one proposer. The owner of (c, p, s) also owns (c, p, s+1),
// which is what makes Phase 1 bypassing possible. counter == -1 encodes the
// bottom round that compares less than every real round.
struct Round {
    std::int64_t counter = -1;
    ProposerId owner;
    std::int64_t sub = 0;

    static Round bottom() { return Round{}; }
    static Round of(std::int64_t counter, ProposerId owner, std::int64_t sub = 0) {
        return Round{counter, std::move(owner), sub};
    }

    bool is_bottom() const { return counter < 0; }

    friend std::strong_ordering operator<=>(const Round& a, const Round& b) {
        if (auto c = a.counter <=> b.counter; c != 0) return c;
        if (auto c = a.owner.compare(b.owner) <=> 0; c != 0) return c;
        return a.sub <=> b.sub;
    }
    friend bool operator==(const Round&, const Round&) = default;

    std::string str() const {
        if (is_bottom()) return "(bot)";
        return "(" + std::to_string(counter) + "," + owner + "," + std::to_string(sub) + ")";
    }
};

enum class Ordering { less, equal, greater };

inline Ordering round_compare(const Round& a, const Round& b) {
    auto c = a <=> b;
    if (c < 0) return Ordering::less;
    if (c > 0) return Ordering::greater;
    return Ordering::equal;
}

// Next round owned by the same proposer; no round owned by anyone lies
// strictly between r and the result for that owner.
Round round_successor(const Round& r);

enum class ValueKind : std::uint8_t { no_op = 0, command = 1 };

// A consensus value: either a client command payload or a no-op.
struct Value {
    ValueKind kind = ValueKind::no_op;
    std::string payload;

    static Value no_op() { return Value{}; }
    static Value command(std::string payload) {
        return Value{ValueKind::command, std::move(payload)};
    }

    bool is_no_op() const { return kind == ValueKind::no_op; }
    friend bool operator==(const Value&, const Value&) = default;
    friend auto operator<=>(const Value&, const Value&) = default;
};

// FNV-1a, used for state digests and trace hashes. Stable across platforms.
struct Hasher {
    std::uint64_t h = 1469598103934665603ull;

    void bytes(const void* data, std::size_t n) {
        auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
    void round(const Round& r) {
        i64(r.counter);
        str(r.owner);
        i64(r.sub);
    }
    void value(const Value& v) {
        u64(static_cast<std::uint64_t>(v.kind));
        str(v.payload);
    }
};

// splitmix64: tiny, portable, deterministic RNG for simulator schedules.
struct Rng {
    std::uint64_t state = 0x9e3779b97f4a7c15ull;

    explicit Rng(std::uint64_t seed = 0) : state(seed + 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    // Uniform in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) { return next() % n; }
    // Uniform in [lo, hi] inclusive.
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }
    bool chance_pct(std::uint64_t pct) { return below(100) < pct; }
};

}  // namespace matchpax
