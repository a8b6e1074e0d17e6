#include "matchpax/sim/corpus.hpp"

namespace matchpax {

ScheduleResult run_corpus_schedule(std::uint64_t seed, const CorpusConfig& cfg) {
    Rng g(seed);
    Schedule sched;
    sched.seed = seed;
    sched.horizon = cfg.horizon;
    sched.plan.drop_pct = g.below(31);
    sched.plan.duplicate_pct = g.below(16);
    sched.plan.delay_min = 1;
    sched.plan.delay_max = 1 + g.below(3);

    ClusterSpec spec;
    spec.seed = seed;
    spec.election_timeout = 60;
    spec.hb_interval = 8;
    spec.client_timeout = 90;
    spec.resend_interval = 40;
    spec.mutant_acceptor = cfg.mutant_acceptor;
    spec.mutant_matchmaker = cfg.mutant_matchmaker;
    spec.mutant_gc = cfg.mutant_gc;

    // At most one crash per role.
    if (g.chance_pct(50))
        sched.plan.crashes.push_back(
            {static_cast<Time>(60 + g.below(200)), "p1", static_cast<Time>(-1)});
    if (!sched.plan.crashes.empty() && g.chance_pct(60))
        sched.plan.crashes.back().restart_at = sched.plan.crashes.back().at + 100;
    if (g.chance_pct(50)) {
        Time at = static_cast<Time>(40 + g.below(250));
        NodeId a = "a" + std::to_string(1 + g.below(6));
        sched.plan.crashes.push_back({at, a, g.chance_pct(50) ? at + 80 : -1});
    }
    if (g.chance_pct(40)) {
        Time at = static_cast<Time>(40 + g.below(250));
        NodeId m = "m" + std::to_string(1 + g.below(3));
        sched.plan.crashes.push_back({at, m, g.chance_pct(50) ? at + 80 : -1});
    }
    if (g.chance_pct(40)) {
        Time at = static_cast<Time>(40 + g.below(250));
        NodeId r = "r" + std::to_string(1 + g.below(3));
        sched.plan.crashes.push_back({at, r, at + 80});
    }
    if (g.chance_pct(30)) {
        FaultPlan::Partition p;
        p.from = static_cast<Time>(60 + g.below(200));
        p.to = p.from + 40;
        NodeId isolated = g.chance_pct(50) ? "p" + std::to_string(1 + g.below(2))
                                           : "a" + std::to_string(1 + g.below(6));
        p.side_a = {isolated};
        for (int i = 1; i <= 2; ++i) p.side_b.push_back("p" + std::to_string(i));
        for (int i = 1; i <= 6; ++i) p.side_b.push_back("a" + std::to_string(i));
        for (int i = 1; i <= 6; ++i) p.side_b.push_back("m" + std::to_string(i));
        for (int i = 1; i <= 3; ++i) p.side_b.push_back("r" + std::to_string(i));
        p.side_b.erase(std::remove(p.side_b.begin(), p.side_b.end(), isolated), p.side_b.end());
        sched.plan.partitions.push_back(p);
    }

    SimNet net(sched);
    Cluster c = build_cluster(net, spec);

    Rng ev(seed ^ 0x5bd1e995u);
    for (Time t = cfg.reconfig_every; t < cfg.horizon; t += cfg.reconfig_every) {
        Configuration target = c.random_config(ev, "C@" + std::to_string(t));
        net.at(t, [c, target](SimNet& n) { fire_reconfigure(n, c, target); });
    }
    Time mm_at = static_cast<Time>(cfg.horizon / 4 + ev.below(60));
    net.at(mm_at, [c](SimNet& n) { fire_mm_reconfigure(n, c, c.matchmaker_gens[1]); });

    Trace trace = net.run();
    ScheduleResult res;
    res.seed = seed;
    res.trace_hash = trace.hash;
    res.deliveries = trace.deliveries;
    res.violations = check_safety(trace.ledger);
    return res;
}

}  // namespace matchpax
