#include "matchpax/sim/cluster.hpp"

#include <algorithm>

namespace matchpax {

namespace {

std::uint64_t id_seed(std::uint64_t base, const NodeId& id) {
    Hasher h;
    h.u64(base);
    h.str(id);
    return h.h;
}

}  // namespace

Configuration Cluster::random_config(Rng& rng, const std::string& label) const {
    std::vector<NodeId> pool = acceptors;
    std::vector<NodeId> pick;
    for (int i = 0; i < 2 * spec.f + 1; ++i) {
        auto idx = rng.below(pool.size());
        pick.push_back(pool[idx]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
    }
    return majority_configuration(label, std::move(pick));
}

Cluster build_cluster(SimNet& net, const ClusterSpec& spec) {
    Cluster c;
    c.spec = spec;
    for (int i = 1; i <= spec.proposer_count; ++i) c.proposers.push_back("p" + std::to_string(i));
    for (int i = 1; i <= spec.acceptor_pool; ++i) c.acceptors.push_back("a" + std::to_string(i));
    for (int g = 0; g < spec.matchmaker_gens; ++g) {
        std::vector<NodeId> gen;
        for (int i = 1; i <= 2 * spec.f + 1; ++i)
            gen.push_back("m" + std::to_string(g * (2 * spec.f + 1) + i));
        c.matchmaker_gens.push_back(std::move(gen));
    }
    for (int i = 1; i <= spec.replica_count; ++i) c.replicas.push_back("r" + std::to_string(i));
    for (int i = 1; i <= spec.client_count; ++i) c.clients.push_back("c" + std::to_string(i));
    c.driver = "d1";

    std::vector<NodeId> initial(c.acceptors.begin(), c.acceptors.begin() + (2 * spec.f + 1));
    c.initial_config = majority_configuration("C0", initial);

    net.ledger().f = spec.f;

    for (const auto& id : c.proposers) {
        LeaderOptions lo;
        lo.proposers = c.proposers;
        lo.matchmakers = c.matchmaker_gens[0];
        lo.replicas = c.replicas;
        lo.driver = c.driver;
        lo.f = spec.f;
        lo.proactive = spec.proactive;
        lo.bypass = spec.bypass;
        lo.gc = spec.gc;
        lo.thrifty = spec.thrifty;
        lo.initial_config = c.initial_config;
        lo.bootstrap_leader = spec.bootstrap_leader && id == c.proposers.front();
        lo.hb_interval = spec.hb_interval;
        lo.election_timeout = spec.election_timeout;
        lo.resend_interval = spec.resend_interval;
        lo.rng_seed = id_seed(spec.seed, id);
        lo.unsafe_gc_without_guards = spec.mutant_gc;
        net.add_node(id, [id, lo](std::shared_ptr<Journal>) {
            return std::make_unique<LeaderNode>(id, lo);
        });
    }
    for (const auto& id : c.acceptors) {
        AcceptorOptions ao;
        ao.unsafe_accept_lower_rounds = spec.mutant_acceptor;
        net.add_node(id, [id, ao](std::shared_ptr<Journal> j) {
            return std::make_unique<AcceptorNode>(id, std::move(j), ao);
        });
    }
    for (std::size_t g = 0; g < c.matchmaker_gens.size(); ++g) {
        for (const auto& id : c.matchmaker_gens[g]) {
            MatchmakerOptions mo;
            mo.starts_active = g == 0;
            mo.unsafe_non_monotone = spec.mutant_matchmaker;
            net.add_node(id, [id, mo](std::shared_ptr<Journal> j) {
                return std::make_unique<MatchmakerNode>(id, std::move(j), mo);
            });
        }
    }
    for (std::size_t i = 0; i < c.replicas.size(); ++i) {
        ReplicaOptions ro;
        ro.replicas = c.replicas;
        ro.index = static_cast<int>(i);
        ro.app = spec.app;
        NodeId id = c.replicas[i];
        net.add_node(id, [id, ro](std::shared_ptr<Journal> j) {
            return std::make_unique<ReplicaNode>(id, std::move(j), ro);
        });
    }
    for (const auto& id : c.clients) {
        ClientOptions co;
        co.proposers = c.proposers;
        co.leader_hint = c.proposers.front();
        co.op = spec.op;
        co.timeout = spec.client_timeout;
        co.metronome = spec.client_metronome;
        net.add_node(id, [id, co](std::shared_ptr<Journal>) {
            return std::make_unique<ClientNode>(id, co);
        });
    }
    {
        DriverOptions dopts;
        dopts.matchmakers = c.matchmaker_gens[0];
        dopts.proposers = c.proposers;
        dopts.f = spec.f;
        dopts.rng_seed = id_seed(spec.seed, c.driver);
        NodeId id = c.driver;
        net.add_node(id, [id, dopts](std::shared_ptr<Journal>) {
            return std::make_unique<MmReconfigDriver>(id, dopts);
        });
    }
    return c;
}

void fire_reconfigure(SimNet& net, const Cluster& c, const Configuration& cfg) {
    for (const auto& p : c.proposers) net.inject(c.driver, p, ReconfigureCmd{cfg});
}

void fire_mm_reconfigure(SimNet& net, const Cluster& c, const std::vector<NodeId>& m_new) {
    net.inject(c.driver, c.driver, MmReconfigureCmd{m_new});
}

void fire_elect(SimNet& net, const Cluster& c, const NodeId& proposer) {
    net.inject(c.driver, proposer, ElectCmd{});
}

}  // namespace matchpax
