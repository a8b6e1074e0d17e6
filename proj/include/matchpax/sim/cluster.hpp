#pragma once

#include "matchpax/acceptor.hpp"
#include "matchpax/client.hpp"
#include "matchpax/leader.hpp"
#include "matchpax/matchmaker.hpp"
#include "matchpax/mmreconfig.hpp"
#include "matchpax/replica.hpp"
#include "matchpax/sim/simnet.hpp"

namespace matchpax {

// Standard Matchmaker MultiPaxos deployment for the simulator: f+1
// proposers, a pool of 2(2f+1) acceptors (the first 2f+1 form the initial
// configuration), generations of 2f+1 matchmakers (generation 0 active),
// 2f+1 replicas, closed-loop or metronome clients, and one driver.
struct ClusterSpec {
    int f = 1;
    int proposer_count = 2;
    int acceptor_pool = 6;
    int matchmaker_gens = 2;
    int replica_count = 3;
    int client_count = 2;

    bool proactive = true;
    bool bypass = true;
    bool gc = true;
    bool thrifty = false;

    Time hb_interval = 8;
    Time election_timeout = 0;  // 0: elections only via ElectCmd
    Time resend_interval = 80;
    Time client_timeout = 120;
    Time client_metronome = 0;
    std::string op = "noop";
    std::string app = "noop";
    bool bootstrap_leader = true;
    std::uint64_t seed = 1;

    // Seeded bugs (mutant testing only).
    bool mutant_acceptor = false;
    bool mutant_matchmaker = false;
    bool mutant_gc = false;
};

struct Cluster {
    ClusterSpec spec;
    std::vector<NodeId> proposers;
    std::vector<NodeId> acceptors;  // full pool
    std::vector<std::vector<NodeId>> matchmaker_gens;
    std::vector<NodeId> replicas;
    std::vector<NodeId> clients;
    NodeId driver;
    Configuration initial_config;

    // Random 2f+1-subset of the acceptor pool, for reconfiguration events.
    Configuration random_config(Rng& rng, const std::string& label) const;
};

Cluster build_cluster(SimNet& net, const ClusterSpec& spec);

// Experiment-event helpers (host actions at exact virtual times).
void fire_reconfigure(SimNet& net, const Cluster& c, const Configuration& cfg);
void fire_mm_reconfigure(SimNet& net, const Cluster& c, const std::vector<NodeId>& m_new);
void fire_elect(SimNet& net, const Cluster& c, const NodeId& proposer);

}  // namespace matchpax
