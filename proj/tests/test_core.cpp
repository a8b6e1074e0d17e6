#include <algorithm>
#include <set>

#include "doctest.h"
#include "matchpax/config.hpp"
#include "matchpax/types.hpp"

using namespace matchpax;

namespace {

Round R(std::int64_t c, const char* o, std::int64_t s) { return Round::of(c, o, s); }

// Independent oracle: subset enumeration with std::set intersection, no
// shared code with validate_configuration.
bool oracle_all_pairs_intersect(const std::vector<std::vector<NodeId>>& p1s,
                                const std::vector<std::vector<NodeId>>& p2s) {
    for (const auto& q1 : p1s) {
        std::set<NodeId> s1(q1.begin(), q1.end());
        for (const auto& q2 : p2s) {
            bool hit = false;
            for (const auto& a : q2)
                if (s1.count(a)) hit = true;
            if (!hit) return false;
        }
    }
    return true;
}

std::vector<std::vector<NodeId>> k_subsets(const std::vector<NodeId>& ids, std::size_t k) {
    std::vector<std::vector<NodeId>> out;
    std::vector<NodeId> cur;
    auto rec = [&](auto&& self, std::size_t start) -> void {
        if (cur.size() == k) {
            out.push_back(cur);
            return;
        }
        for (std::size_t i = start; i < ids.size(); ++i) {
            cur.push_back(ids[i]);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

}  // namespace

TEST_CASE("round comparison is lexicographic with bottom least") {
    CHECK(round_compare(R(0, "a", 0), R(0, "a", 1)) == Ordering::less);
    CHECK(round_compare(R(1, "a", 0), R(1, "a", 0)) == Ordering::equal);
    CHECK(round_compare(R(0, "b", 3), R(1, "a", 0)) == Ordering::less);
    CHECK(round_compare(R(0, "a", 5), R(0, "b", 0)) == Ordering::less);
    CHECK(round_compare(Round::bottom(), R(0, "a", 0)) == Ordering::less);
    CHECK(round_compare(R(0, "a", 0), Round::bottom()) == Ordering::greater);
}

TEST_CASE("round order is total on a generated universe") {
    std::vector<Round> universe;
    universe.push_back(Round::bottom());
    for (std::int64_t c = 0; c < 3; ++c)
        for (const char* o : {"a", "b", "c"})
            for (std::int64_t s = 0; s < 3; ++s) universe.push_back(R(c, o, s));
    for (const auto& x : universe)
        for (const auto& y : universe) {
            bool lt = x < y, gt = y < x, eq = x == y;
            CHECK((lt || gt || eq));
            CHECK(((lt ? 1 : 0) + (gt ? 1 : 0) + (eq ? 1 : 0)) == 1);
            for (const auto& z : universe)
                if (x < y && y < z) CHECK(x < z);
        }
}

TEST_CASE("round successor") {
    CHECK(round_successor(R(0, "a", 0)) == R(0, "a", 1));
    CHECK(round_successor(R(3, "b", 7)) == R(3, "b", 8));
    CHECK_THROWS(round_successor(Round::bottom()));

    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        Round r = R(rng.range(0, 50), rng.chance_pct(50) ? "a" : "b", rng.range(0, 50));
        Round s = round_successor(r);
        CHECK(round_compare(r, s) == Ordering::less);
        CHECK(s.owner == r.owner);
        // Nothing owned by anyone sits strictly between r and s for r's owner:
        // the only tuples between (c,o,k) and (c,o,k+1) would need the same
        // counter and owner and a fractional sub.
        CHECK(s.counter == r.counter);
        CHECK(s.sub == r.sub + 1);
    }
}

TEST_CASE("validate_configuration: majority systems are valid") {
    Configuration c = majority_configuration("C0", {"a1", "a2", "a3"});
    CHECK(c.phase1_quorums.size() == 3);  // all 2-subsets of 3
    CHECK(validate_configuration(c).empty());

    for (int f = 1; f <= 4; ++f) {
        std::vector<NodeId> ids;
        for (int i = 0; i < 2 * f + 1; ++i) ids.push_back("a" + std::to_string(i));
        Configuration cf = majority_configuration("Cf", ids);
        CHECK(validate_configuration(cf).empty());
        CHECK(oracle_all_pairs_intersect(cf.phase1_quorums, cf.phase2_quorums));
    }
}

TEST_CASE("validate_configuration: disjoint singletons are reported") {
    Configuration c;
    c.label = "bad";
    c.acceptors = {"a1", "a2"};
    c.phase1_quorums = {{"a1"}};
    c.phase2_quorums = {{"a2"}};
    auto violations = validate_configuration(c);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == ConfigViolation::Kind::disjoint_quorums);
    CHECK(violations[0].phase1_quorum == std::vector<NodeId>{"a1"});
    CHECK(violations[0].phase2_quorum == std::vector<NodeId>{"a2"});
}

TEST_CASE("validate_configuration: 4 acceptors, 3-subsets vs 2-subsets, vs brute force") {
    std::vector<NodeId> ids = {"a1", "a2", "a3", "a4"};
    Configuration c;
    c.label = "grid";
    c.acceptors = ids;
    c.phase1_quorums = k_subsets(ids, 3);
    c.phase2_quorums = k_subsets(ids, 2);
    bool expected_ok = oracle_all_pairs_intersect(c.phase1_quorums, c.phase2_quorums);
    // 3 + 2 > 4, so every pair intersects.
    CHECK(expected_ok);
    CHECK(validate_configuration(c).empty() == expected_ok);
}

TEST_CASE("validate_configuration: random families agree with the oracle") {
    Rng rng(99);
    std::vector<NodeId> ids = {"a1", "a2", "a3", "a4", "a5"};
    for (int trial = 0; trial < 200; ++trial) {
        Configuration c;
        c.label = "rnd";
        c.acceptors = ids;
        auto random_family = [&] {
            std::vector<std::vector<NodeId>> fam;
            int nq = static_cast<int>(rng.range(1, 4));
            for (int q = 0; q < nq; ++q) {
                std::vector<NodeId> quorum;
                for (const auto& a : ids)
                    if (rng.chance_pct(45)) quorum.push_back(a);
                if (quorum.empty()) quorum.push_back(ids[rng.below(ids.size())]);
                fam.push_back(quorum);
            }
            return fam;
        };
        c.phase1_quorums = random_family();
        c.phase2_quorums = random_family();
        bool ok = validate_configuration(c).empty();
        CHECK(ok == oracle_all_pairs_intersect(c.phase1_quorums, c.phase2_quorums));
    }
}

TEST_CASE("quorum_covered") {
    Configuration c = majority_configuration("C", {"a1", "a2", "a3"});
    CHECK(quorum_covered(c.phase2_quorums, {"a1", "a2"}));
    CHECK(quorum_covered(c.phase2_quorums, {"a1", "a2", "a3"}));
    CHECK_FALSE(quorum_covered(c.phase2_quorums, {"a2"}));
    CHECK_FALSE(quorum_covered(c.phase2_quorums, {}));
}

TEST_CASE("no-op values are distinguishable from any command") {
    CHECK(Value::no_op().payload.empty());
    CHECK(Value::no_op() != Value::command(""));
    CHECK(Value::no_op() != Value::command("x"));
    CHECK(Value::command("x") == Value::command("x"));
}
