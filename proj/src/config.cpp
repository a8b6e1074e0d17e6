#include "matchpax/config.hpp"

#include <algorithm>

namespace matchpax {

Round round_successor(const Round& r) {
    if (r.is_bottom()) throw std::invalid_argument("round_successor: bottom round has no successor");
    return Round{r.counter, r.owner, r.sub + 1};
}

void Configuration::digest(Hasher& h) const {
    h.str(label);
    h.u64(acceptors.size());
    for (const auto& a : acceptors) h.str(a);
    for (const auto* fam : {&phase1_quorums, &phase2_quorums}) {
        h.u64(fam->size());
        for (const auto& q : *fam) {
            h.u64(q.size());
            for (const auto& a : q) h.str(a);
        }
    }
}

std::string ConfigViolation::describe() const {
    auto join = [](const std::vector<NodeId>& v) {
        std::string s = "{";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
        return s + "}";
    };
    switch (kind) {
        case Kind::empty_quorum_family:
            return "empty quorum family";
        case Kind::quorum_not_subset:
            return "quorum " + join(phase1_quorum.empty() ? phase2_quorum : phase1_quorum) +
                   " not a subset of the acceptor set";
        case Kind::disjoint_quorums:
            return "phase1 quorum " + join(phase1_quorum) + " disjoint from phase2 quorum " +
                   join(phase2_quorum);
    }
    return "?";
}

namespace {

bool sorted_subset(const std::vector<NodeId>& sub, const std::vector<NodeId>& super) {
    return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

bool sorted_intersects(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return true;
        if (a[i] < b[j]) ++i; else ++j;
    }
    return false;
}

}  // namespace

std::vector<ConfigViolation> validate_configuration(const Configuration& c) {
    std::vector<ConfigViolation> out;
    if (c.phase1_quorums.empty() || c.phase2_quorums.empty())
        out.push_back({ConfigViolation::Kind::empty_quorum_family, {}, {}});
    for (const auto& q : c.phase1_quorums)
        if (!sorted_subset(q, c.acceptors))
            out.push_back({ConfigViolation::Kind::quorum_not_subset, q, {}});
    for (const auto& q : c.phase2_quorums)
        if (!sorted_subset(q, c.acceptors))
            out.push_back({ConfigViolation::Kind::quorum_not_subset, {}, q});
    for (const auto& q1 : c.phase1_quorums)
        for (const auto& q2 : c.phase2_quorums)
            if (!sorted_intersects(q1, q2))
                out.push_back({ConfigViolation::Kind::disjoint_quorums, q1, q2});
    return out;
}

Configuration majority_configuration(std::string label, std::vector<NodeId> acceptors) {
    std::sort(acceptors.begin(), acceptors.end());
    acceptors.erase(std::unique(acceptors.begin(), acceptors.end()), acceptors.end());
    const std::size_t n = acceptors.size();
    const std::size_t k = n / 2 + 1;

    std::vector<std::vector<NodeId>> majorities;
    std::vector<NodeId> cur;
    auto rec = [&](auto&& self, std::size_t start) -> void {
        if (cur.size() == k) {
            majorities.push_back(cur);
            return;
        }
        for (std::size_t i = start; i < n; ++i) {
            cur.push_back(acceptors[i]);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    if (n > 0) rec(rec, 0);

    Configuration c;
    c.label = std::move(label);
    c.acceptors = std::move(acceptors);
    c.phase1_quorums = majorities;
    c.phase2_quorums = std::move(majorities);
    return c;
}

bool quorum_covered(const std::vector<std::vector<NodeId>>& family,
                    const std::vector<NodeId>& responders) {
    for (const auto& q : family)
        if (std::includes(responders.begin(), responders.end(), q.begin(), q.end())) return true;
    return false;
}

}  // namespace matchpax
