#pragma once

#include "matchpax/sim/cluster.hpp"

namespace matchpax {

// One randomized schedule of the standard fault matrix: drops up to 30%,
// duplicates, reorders via jittered delays, at most one crash per role,
// acceptor reconfigurations every 50 virtual time units, and one matchmaker
// reconfiguration.
struct CorpusConfig {
    Time horizon = 400;
    Time reconfig_every = 50;
    bool mutant_acceptor = false;
    bool mutant_matchmaker = false;
    bool mutant_gc = false;
};

struct ScheduleResult {
    std::uint64_t seed = 0;
    std::uint64_t trace_hash = 0;
    std::uint64_t deliveries = 0;
    std::vector<Violation> violations;
};

ScheduleResult run_corpus_schedule(std::uint64_t seed, const CorpusConfig& cfg);

}  // namespace matchpax
