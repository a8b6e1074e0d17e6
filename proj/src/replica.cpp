#include "matchpax/replica.hpp"

#include <sstream>

#include "matchpax/bytes.hpp"

namespace matchpax {

std::string encode_command(const Command& c) {
    ByteWriter w;
    w.str(c.client);
    w.i64(c.seq);
    w.str(c.op);
    return std::move(w.out);
}

std::optional<Command> decode_command(const std::string& payload) {
    ByteReader r(payload);
    Command c;
    c.client = r.str();
    c.seq = r.i64();
    c.op = r.str();
    if (r.fail || r.p != r.end) return std::nullopt;
    return c;
}

std::string KvApp::apply(const std::string& op) {
    std::istringstream in(op);
    std::string verb, key;
    in >> verb >> key;
    if (verb == "set") {
        std::string v;
        in >> v;
        kv_[key] = v;
        return "ok";
    }
    if (verb == "get") {
        auto it = kv_.find(key);
        return it == kv_.end() ? "" : it->second;
    }
    return op;  // echo
}

void KvApp::digest(Hasher& h) const {
    h.u64(kv_.size());
    for (const auto& [k, v] : kv_) {
        h.str(k);
        h.str(v);
    }
}

namespace {
constexpr char kRecChosen = 'C';
constexpr std::uint64_t kTimerGap = 1;

std::unique_ptr<App> make_app(const std::string& name) {
    if (name == "kv") return std::make_unique<KvApp>();
    return std::make_unique<NoopApp>();
}
}  // namespace

ReplicaNode::ReplicaNode(NodeId id, std::shared_ptr<Journal> journal, ReplicaOptions opts)
    : Node(std::move(id)), journal_(std::move(journal)), opts_(std::move(opts)) {
    if (!journal_) journal_ = std::make_shared<MemJournal>();
    app_ = make_app(opts_.app);
}

bool ReplicaNode::designated(Slot s) const {
    if (opts_.replicas.empty()) return true;
    return s % static_cast<Slot>(opts_.replicas.size()) ==
           static_cast<Slot>(opts_.index);
}

void ReplicaNode::on_start(Context& ctx) {
    for (const auto& rec : journal_->replay()) {
        ByteReader r(rec);
        if (r.u8() != kRecChosen) {
            ctx.panic("replica journal: unknown record");
            return;
        }
        Slot s = r.i64();
        Value v = r.value();
        log_[s] = v;
    }
    execute_prefix(ctx, /*quiet=*/true);
    if (opts_.gap_interval > 0) ctx.set_timer(opts_.gap_interval, kTimerGap);
}

void ReplicaNode::store_chosen(Slot s, const Value& v, Context& ctx, bool quiet) {
    auto it = log_.find(s);
    if (it != log_.end()) {
        if (!(it->second == v)) {
            // Two distinct chosen values for one slot: surfaced, never masked.
            ctx.panic("replica: conflicting chosen values at slot " + std::to_string(s));
        }
        return;  // duplicate, no re-execution
    }
    log_[s] = v;
    if (opts_.journal_enabled) {
        ByteWriter w;
        w.u8(kRecChosen);
        w.i64(s);
        w.value(v);
        journal_->append(w.out);
    }
    execute_prefix(ctx, quiet);
}

void ReplicaNode::execute_prefix(Context& ctx, bool quiet) {
    Slot before = exec_watermark_;
    while (true) {
        auto it = log_.find(exec_watermark_ + 1);
        if (it == log_.end()) break;
        ++exec_watermark_;
        const Value& v = it->second;
        if (v.is_no_op()) continue;
        auto cmd = decode_command(v.payload);
        if (!cmd) {  // undecodable commands are applied raw, nobody to answer
            app_->apply(v.payload);
            if (!quiet) ctx.observe_executed(exec_watermark_, v);
            continue;
        }
        auto cached = reply_cache_.find(cmd->client);
        std::string result;
        if (cached != reply_cache_.end() && cached->second.first >= cmd->seq) {
            result = cached->second.second;  // at-most-once: do not re-apply
        } else {
            result = app_->apply(cmd->op);
            reply_cache_[cmd->client] = {cmd->seq, result};
        }
        if (!quiet) {
            ctx.observe_executed(exec_watermark_, v);
            if (designated(exec_watermark_))
                ctx.send(cmd->client, ClientReply{result, cmd->client, cmd->seq});
        }
    }
    if (exec_watermark_ != before && !quiet) {
        journal_->sync();
        if (!leader_.empty()) ctx.send(leader_, PrefixPersisted{exec_watermark_});
    }
}

void ReplicaNode::on_message(const Envelope& env, Context& ctx) {
    if (const auto* ch = std::get_if<Chosen>(&env.msg)) {
        leader_ = env.from;
        Slot before = exec_watermark_;
        store_chosen(ch->slot, ch->value, ctx, /*quiet=*/false);
        if (exec_watermark_ == before && !leader_.empty())
            ctx.send(leader_, PrefixPersisted{exec_watermark_});  // gap: still ack progress
    } else if (std::get_if<WatermarkRequest>(&env.msg)) {
        ctx.send(env.from, WatermarkReply{exec_watermark_});
    } else if (const auto* cr = std::get_if<CatchupRequest>(&env.msg)) {
        CatchupReply reply;
        for (auto it = log_.lower_bound(cr->from); it != log_.end() && it->first <= cr->to; ++it)
            reply.entries.emplace_back(it->first, it->second);
        ctx.send(env.from, std::move(reply));
    } else if (const auto* crep = std::get_if<CatchupReply>(&env.msg)) {
        for (const auto& [s, v] : crep->entries) store_chosen(s, v, ctx, /*quiet=*/false);
    } else if (const auto* rr = std::get_if<ReplayRequest>(&env.msg)) {
        auto it = reply_cache_.find(rr->client);
        if (it != reply_cache_.end() && it->second.first == rr->seq)
            ctx.send(rr->client, ClientReply{it->second.second, rr->client, rr->seq});
    } else if (std::get_if<StateHashRequest>(&env.msg)) {
        ctx.send(env.from, StateHashReply{state_hash()});
    }
}

void ReplicaNode::on_timer(std::uint64_t tag, Context& ctx) {
    if (tag != kTimerGap) return;
    // A hole below stored entries means a Chosen was lost; fill from a peer.
    if (!log_.empty() && log_.rbegin()->first > exec_watermark_ && opts_.replicas.size() > 1) {
        const NodeId& peer = opts_.replicas[gap_peer_++ % opts_.replicas.size()];
        if (peer != id_) ctx.send(peer, CatchupRequest{exec_watermark_ + 1, log_.rbegin()->first});
    }
    ctx.set_timer(opts_.gap_interval, kTimerGap);
}

std::uint64_t ReplicaNode::state_hash() const {
    Hasher h;
    h.i64(exec_watermark_);
    h.u64(log_.size());
    for (const auto& [s, v] : log_) {
        h.i64(s);
        h.value(v);
    }
    app_->digest(h);
    return h.h;
}

}  // namespace matchpax
