#pragma once

#include <string>
#include <vector>

#include "matchpax/types.hpp"

namespace matchpax {

// A configuration is an acceptor set plus explicit Phase 1 and Phase 2 quorum
// families where every Phase 1 quorum intersects every Phase 2 quorum.
// Families are explicit subset lists (not predicates) so the safety oracle
// can enumerate them. Identity for protocol purposes is (round, label); the
// same acceptor set may be re-used under a new round.
struct Configuration {
    std::string label;
    std::vector<NodeId> acceptors;                    // sorted, unique
    std::vector<std::vector<NodeId>> phase1_quorums;  // each sorted
    std::vector<std::vector<NodeId>> phase2_quorums;

    friend bool operator==(const Configuration&, const Configuration&) = default;

    void digest(Hasher& h) const;
};

struct ConfigViolation {
    enum class Kind {
        empty_quorum_family,
        quorum_not_subset,
        disjoint_quorums,
    };
    Kind kind;
    // For disjoint_quorums: the offending (phase1, phase2) pair.
    std::vector<NodeId> phase1_quorum;
    std::vector<NodeId> phase2_quorum;
    std::string describe() const;
};

// Checks every Configuration invariant; the report lists each violation,
// including every non-intersecting quorum pair.
std::vector<ConfigViolation> validate_configuration(const Configuration& c);

inline bool configuration_ok(const Configuration& c) {
    return validate_configuration(c).empty();
}

// Majority quorum system: both families are all ceil((n+1)/2)-subsets.
Configuration majority_configuration(std::string label, std::vector<NodeId> acceptors);

// True iff some quorum in the family is a subset of `responders` (sorted).
bool quorum_covered(const std::vector<std::vector<NodeId>>& family,
                    const std::vector<NodeId>& responders);

}  // namespace matchpax
