#include "matchpax/sim/simnet.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <ostream>
#include <sstream>

#include "matchpax/codec.hpp"

namespace matchpax {

class SimNet::SimContext : public Context {
  public:
    SimContext(SimNet& net, NodeId self) : net_(net), self_(std::move(self)) {}

    Time now() const override { return net_.now_; }
    void send(const NodeId& to, Message m) override { net_.post_from_node(self_, to, std::move(m)); }
    void set_timer(Time delay, std::uint64_t tag) override {
        QueuedEvent ev;
        ev.kind = QueuedEvent::Kind::timer;
        ev.node = self_;
        ev.timer_tag = tag;
        net_.enqueue(net_.now_ + std::max<Time>(delay, 0), std::move(ev));
    }
    void panic(const std::string& why) override {
        auto it = net_.nodes_.find(self_);
        if (it != net_.nodes_.end()) it->second.halted = true;
        net_.panics_.push_back(self_ + ": " + why);
        net_.ledger_.add(PanicRec{self_, why});
        net_.record(self_, "panic");
    }
    void observe(const std::string& kind, const std::string&) override {
        net_.record(self_, kind.c_str());
    }
    void observe_vote(Slot s, const Round& r, const Value& v) override {
        net_.ledger_.add(VoteRec{self_, s, r, v});
    }
    void observe_mm_accept(const Round& r, const Configuration& c) override {
        Hasher h;
        c.digest(h);
        net_.ledger_.add(MmAcceptRec{self_, r, h.h, c});
    }
    void observe_matchb(const Round& r, const Round& w, const ConfigHistory& hist) override {
        MatchbRec rec{self_, r, w, {}};
        rec.hist_rounds.reserve(hist.size());
        for (const auto& [hr, hc] : hist) rec.hist_rounds.push_back(hr);
        net_.ledger_.add(std::move(rec));
    }
    void observe_history(const Round& r, const ConfigHistory& hist) override {
        HistoryRec rec{self_, r, {}};
        rec.hist_rounds.reserve(hist.size());
        for (const auto& [hr, hc] : hist) rec.hist_rounds.push_back(hr);
        net_.ledger_.add(std::move(rec));
    }
    void observe_garbage_ack(const Round& r) override { net_.ledger_.add(GarbageRec{self_, r}); }
    void observe_phase2a(Slot s, const Round& r, const Value& v, bool any) override {
        net_.ledger_.add(Phase2aRec{self_, s, r, v, any});
    }
    void observe_chosen(Slot s, const Round& r, const Value& v) override {
        net_.ledger_.add(ChosenRec{self_, s, r, v});
    }
    void observe_executed(Slot s, const Value& v) override {
        net_.ledger_.add(ExecRec{self_, s, v});
    }
    void observe_reconf_vote(const Round& r, const std::vector<NodeId>& v) override {
        net_.ledger_.add(ReconfVoteRec{self_, r, v});
    }
    void observe_activation(std::uint64_t nonce, const std::vector<NodeId>& set) override {
        net_.ledger_.add(ActivationRec{nonce, set});
    }

  private:
    SimNet& net_;
    NodeId self_;
};

SimNet::SimNet(const Schedule& schedule, bool record_events)
    : schedule_(schedule), record_events_(record_events), rng_(schedule.seed) {
    for (const auto& c : schedule_.plan.crashes) {
        at(c.at, [id = c.node](SimNet& net) { net.crash(id); });
        if (c.restart_at >= 0)
            at(c.restart_at, [id = c.node](SimNet& net) { net.restart(id); });
    }
}

void SimNet::add_node(const NodeId& id, NodeFactory factory) {
    Hosted h;
    h.journal = std::make_shared<MemJournal>();
    h.factory = std::move(factory);
    h.node = h.factory(h.journal);
    nodes_.emplace(id, std::move(h));
}

void SimNet::at(Time t, std::function<void(SimNet&)> action) {
    host_actions_.push_back({t, static_cast<std::uint64_t>(host_actions_.size()), std::move(action)});
}

void SimNet::post(const NodeId& from, const NodeId& to, Message m) {
    post_from_node(from, to, std::move(m));
}

void SimNet::inject(const NodeId& from, const NodeId& to, Message m) {
    auto it = nodes_.find(to);
    if (it == nodes_.end() || !it->second.up || it->second.halted) return;
    Envelope env{from, to, 0, std::move(m)};
    SimContext ctx(*this, to);
    it->second.node->on_message(env, ctx);
    record(to, message_name(env.msg));
}

Node* SimNet::node(const NodeId& id) {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : it->second.node.get();
}

bool SimNet::alive(const NodeId& id) const {
    auto it = nodes_.find(id);
    return it != nodes_.end() && it->second.up && !it->second.halted;
}

void SimNet::crash(const NodeId& id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end() || !it->second.up) return;
    it->second.up = false;
    record(id, "crash");
}

void SimNet::restart(const NodeId& id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end() || it->second.up) return;
    // State loss except the journal; the factory rebuilds and replays.
    it->second.node = it->second.factory(it->second.journal);
    it->second.up = true;
    it->second.halted = false;
    record(id, "restart");
    SimContext ctx(*this, id);
    it->second.node->on_start(ctx);
}

void SimNet::enqueue(Time t, QueuedEvent ev) {
    queue_.emplace(std::make_pair(t, enqueue_seq_++), std::move(ev));
}

bool SimNet::partitioned(const NodeId& a, const NodeId& b) const {
    for (const auto& p : schedule_.plan.partitions) {
        if (now_ < p.from || now_ > p.to) continue;
        bool a_in_a = std::count(p.side_a.begin(), p.side_a.end(), a) > 0;
        bool a_in_b = std::count(p.side_b.begin(), p.side_b.end(), a) > 0;
        bool b_in_a = std::count(p.side_a.begin(), p.side_a.end(), b) > 0;
        bool b_in_b = std::count(p.side_b.begin(), p.side_b.end(), b) > 0;
        if ((a_in_a && b_in_b) || (a_in_b && b_in_a)) return true;
    }
    return false;
}

void SimNet::post_from_node(const NodeId& from, const NodeId& to, Message m) {
    if (const auto* p2a = std::get_if<Phase2A>(&m))
        phase2a_sends_.push_back({now_, from, m.index(), p2a->round});
    auto fit = nodes_.find(from);
    std::uint64_t seq = fit != nodes_.end() ? ++fit->second.send_seq : 0;
    if (schedule_.plan.drop_pct > 0 && rng_.chance_pct(schedule_.plan.drop_pct)) return;
    Time delay = schedule_.plan.delay_min;
    if (schedule_.plan.delay_max > schedule_.plan.delay_min)
        delay = rng_.range(schedule_.plan.delay_min, schedule_.plan.delay_max);
    auto td = schedule_.plan.type_delays.find(m.index());
    if (td != schedule_.plan.type_delays.end()) delay += td->second;

    QueuedEvent ev;
    ev.kind = QueuedEvent::Kind::deliver;
    ev.env = Envelope{from, to, seq, std::move(m)};
    enqueue(now_ + delay, ev);
    if (schedule_.plan.duplicate_pct > 0 && rng_.chance_pct(schedule_.plan.duplicate_pct)) {
        Time dup_delay = rng_.range(schedule_.plan.delay_min, schedule_.plan.delay_max + 2);
        enqueue(now_ + dup_delay, std::move(ev));
    }
}

void SimNet::record(const NodeId& id, const char* kind) {
    trace_hash_.i64(now_);
    trace_hash_.str(id);
    trace_hash_.bytes(kind, std::strlen(kind));
    std::uint64_t digest = 0;
    auto it = nodes_.find(id);
    if (it != nodes_.end() && it->second.node) digest = it->second.node->state_hash();
    trace_hash_.u64(digest);
    if (record_events_) events_.push_back({now_, id, kind, digest});
}

void SimNet::deliver(const QueuedEvent& ev) {
    if (ev.kind == QueuedEvent::Kind::timer) {
        auto it = nodes_.find(ev.node);
        if (it == nodes_.end() || !it->second.up || it->second.halted) return;
        SimContext ctx(*this, ev.node);
        it->second.node->on_timer(ev.timer_tag, ctx);
        return;
    }
    auto it = nodes_.find(ev.env.to);
    if (it == nodes_.end() || !it->second.up || it->second.halted) return;
    if (partitioned(ev.env.from, ev.env.to)) return;
    if (!it->second.dedup.accept(ev.env.from, ev.env.seq)) return;
    ++deliveries_;
    SimContext ctx(*this, ev.env.to);
    it->second.node->on_message(ev.env, ctx);
    record(ev.env.to, message_name(ev.env.msg));
}

void SimNet::run_until(Time t) {
    if (!started_) {
        started_ = true;
        std::stable_sort(host_actions_.begin(), host_actions_.end(),
                         [](const HostAction& a, const HostAction& b) {
                             return a.at != b.at ? a.at < b.at : a.order < b.order;
                         });
        for (auto& [id, h] : nodes_) {
            SimContext ctx(*this, id);
            h.node->on_start(ctx);
        }
    }
    while (true) {
        Time next_host = next_host_ < host_actions_.size() ? host_actions_[next_host_].at
                                                           : std::numeric_limits<Time>::max();
        Time next_queue =
            !queue_.empty() ? queue_.begin()->first.first : std::numeric_limits<Time>::max();
        Time next = std::min(next_host, next_queue);
        if (next > t || next == std::numeric_limits<Time>::max()) break;
        now_ = next;
        if (next_host <= next_queue) {
            auto& action = host_actions_[next_host_++];
            action.fire(*this);
        } else {
            auto first = queue_.begin();
            QueuedEvent ev = std::move(first->second);
            queue_.erase(first);
            deliver(ev);
        }
    }
    now_ = t;
}

Trace SimNet::finish() {
    Trace t;
    int f = ledger_.f;
    t.ledger = std::move(ledger_);
    t.ledger.f = f;
    for (auto& [id, h] : nodes_) {
        std::uint64_t digest = h.node ? h.node->state_hash() : 0;
        t.terminal_hashes[id] = digest;
        trace_hash_.str(id);
        trace_hash_.u64(digest);
    }
    t.hash = trace_hash_.h;
    t.events = std::move(events_);
    t.panics = panics_;
    t.deliveries = deliveries_;
    return t;
}

Trace SimNet::run() {
    run_until(schedule_.horizon);
    return finish();
}

void dump_trace(const Trace& t, std::ostream& os) {
    for (const auto& e : t.events)
        os << e.at << " " << e.node << " " << e.kind << " " << std::hex << e.digest << std::dec
           << "\n";
}

std::string schedule_to_text(const Schedule& s) {
    std::ostringstream os;
    os << "seed " << s.seed << "\n";
    os << "horizon " << s.horizon << "\n";
    os << "drop_pct " << s.plan.drop_pct << "\n";
    os << "duplicate_pct " << s.plan.duplicate_pct << "\n";
    os << "delay " << s.plan.delay_min << " " << s.plan.delay_max << "\n";
    for (const auto& [idx, d] : s.plan.type_delays) os << "type_delay " << idx << " " << d << "\n";
    for (const auto& c : s.plan.crashes)
        os << "crash " << c.node << " " << c.at << " " << c.restart_at << "\n";
    for (const auto& p : s.plan.partitions) {
        os << "partition " << p.from << " " << p.to << " |";
        for (const auto& n : p.side_a) os << " " << n;
        os << " |";
        for (const auto& n : p.side_b) os << " " << n;
        os << "\n";
    }
    return os.str();
}

bool schedule_from_text(const std::string& text, Schedule& out) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key.empty() || key[0] == '#') continue;
        if (key == "seed") ls >> out.seed;
        else if (key == "horizon") ls >> out.horizon;
        else if (key == "drop_pct") ls >> out.plan.drop_pct;
        else if (key == "duplicate_pct") ls >> out.plan.duplicate_pct;
        else if (key == "delay") ls >> out.plan.delay_min >> out.plan.delay_max;
        else if (key == "type_delay") {
            std::size_t idx;
            Time d;
            ls >> idx >> d;
            out.plan.type_delays[idx] = d;
        } else if (key == "crash") {
            FaultPlan::Crash c;
            ls >> c.node >> c.at >> c.restart_at;
            out.plan.crashes.push_back(c);
        } else if (key == "partition") {
            FaultPlan::Partition p;
            std::string tok;
            ls >> p.from >> p.to >> tok;  // consume first '|'
            bool in_b = false;
            while (ls >> tok) {
                if (tok == "|") {
                    in_b = true;
                    continue;
                }
                (in_b ? p.side_b : p.side_a).push_back(tok);
            }
            out.plan.partitions.push_back(p);
        } else {
            return false;
        }
    }
    return true;
}

}  // namespace matchpax
