#include "matchpax/codec.hpp"

#include "matchpax/bytes.hpp"

#include <cstring>
#include <stdexcept>

namespace matchpax {

namespace {

using Writer = ByteWriter;
using Reader = ByteReader;

void write_body(Writer& w, const Message& m) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, MatchA>) {
                w.round(v.round);
                w.config(v.config);
            } else if constexpr (std::is_same_v<T, MatchB>) {
                w.round(v.round);
                w.round(v.gc_watermark);
                w.history(v.history);
            } else if constexpr (std::is_same_v<T, GarbageA> || std::is_same_v<T, GarbageB> ||
                                 std::is_same_v<T, Nack> || std::is_same_v<T, Heartbeat> ||
                                 std::is_same_v<T, LeaderElect> || std::is_same_v<T, ReconfPhase1A> ||
                                 std::is_same_v<T, ReconfPhase2B>) {
                w.round(v.round);
            } else if constexpr (std::is_same_v<T, Phase1A>) {
                w.round(v.round);
                w.i64(v.first_slot);
            } else if constexpr (std::is_same_v<T, Phase1B>) {
                w.round(v.round);
                w.u32(static_cast<std::uint32_t>(v.votes.size()));
                for (const auto& [slot, vote] : v.votes) {
                    w.i64(slot);
                    w.round(vote.vr);
                    w.value(vote.vv);
                    w.u8(vote.chosen ? 1 : 0);
                }
            } else if constexpr (std::is_same_v<T, Phase2A>) {
                w.round(v.round);
                w.i64(v.slot);
                w.value(v.value);
                w.u8(v.any ? 1 : 0);
            } else if constexpr (std::is_same_v<T, Phase2B>) {
                w.round(v.round);
                w.i64(v.slot);
                w.value(v.voted);
            } else if constexpr (std::is_same_v<T, StopA> || std::is_same_v<T, WatermarkRequest> ||
                                 std::is_same_v<T, ElectCmd> || std::is_same_v<T, StateHashRequest>) {
                (void)v;
            } else if constexpr (std::is_same_v<T, StopB>) {
                w.history(v.log);
                w.round(v.gc_watermark);
            } else if constexpr (std::is_same_v<T, Bootstrap>) {
                w.u64(v.nonce);
                w.history(v.log);
                w.round(v.gc_watermark);
            } else if constexpr (std::is_same_v<T, BootstrapAck> || std::is_same_v<T, Activate> ||
                                 std::is_same_v<T, ActivateAck>) {
                w.u64(v.nonce);
            } else if constexpr (std::is_same_v<T, ReconfPhase1B>) {
                w.round(v.round);
                w.round(v.vr);
                w.ids(v.vv);
            } else if constexpr (std::is_same_v<T, ReconfPhase2A>) {
                w.round(v.round);
                w.ids(v.value);
            } else if constexpr (std::is_same_v<T, ClientRequest> || std::is_same_v<T, ClientReply>) {
                w.str(v.payload);
                w.str(v.client);
                w.i64(v.seq);
            } else if constexpr (std::is_same_v<T, Chosen>) {
                w.i64(v.slot);
                w.value(v.value);
            } else if constexpr (std::is_same_v<T, PrefixPersisted>) {
                w.i64(v.slot);
            } else if constexpr (std::is_same_v<T, WatermarkReply>) {
                w.i64(v.exec_watermark);
            } else if constexpr (std::is_same_v<T, CatchupRequest>) {
                w.i64(v.from);
                w.i64(v.to);
            } else if constexpr (std::is_same_v<T, CatchupReply>) {
                w.u32(static_cast<std::uint32_t>(v.entries.size()));
                for (const auto& [s, val] : v.entries) {
                    w.i64(s);
                    w.value(val);
                }
            } else if constexpr (std::is_same_v<T, ReplayRequest>) {
                w.str(v.client);
                w.i64(v.seq);
            } else if constexpr (std::is_same_v<T, ChosenHint> || std::is_same_v<T, ChosenHintAck>) {
                w.round(v.round);
                w.i64(v.upto);
            } else if constexpr (std::is_same_v<T, ViewChange>) {
                w.u64(v.version);
                w.ids(v.matchmakers);
            } else if constexpr (std::is_same_v<T, RetireNotice>) {
                w.round(v.below);
                w.ids(v.acceptors);
            } else if constexpr (std::is_same_v<T, ReconfigureCmd>) {
                w.config(v.config);
            } else if constexpr (std::is_same_v<T, MmReconfigureCmd>) {
                w.ids(v.new_matchmakers);
            } else if constexpr (std::is_same_v<T, StateHashReply>) {
                w.u64(v.hash);
            } else {
                static_assert(!sizeof(T*), "unhandled message type");
            }
        },
        m);
}

}  // namespace

const char* message_name(const Message& m) {
    static constexpr const char* names[] = {
        "MatchA", "MatchB", "GarbageA", "GarbageB",
        "Phase1A", "Phase1B", "Phase2A", "Phase2B",
        "StopA", "StopB", "Bootstrap", "BootstrapAck", "Activate", "ActivateAck",
        "ReconfPhase1A", "ReconfPhase1B", "ReconfPhase2A", "ReconfPhase2B",
        "ClientRequest", "ClientReply",
        "Chosen", "PrefixPersisted", "WatermarkRequest", "WatermarkReply",
        "CatchupRequest", "CatchupReply", "ReplayRequest",
        "ChosenHint", "ChosenHintAck",
        "Nack", "Heartbeat", "LeaderElect", "ViewChange", "RetireNotice",
        "ReconfigureCmd", "MmReconfigureCmd", "ElectCmd",
        "StateHashRequest", "StateHashReply"};
    return names[m.index()];
}

const char* decode_error_name(DecodeError e) {
    switch (e) {
        case DecodeError::none: return "none";
        case DecodeError::truncated: return "truncated";
        case DecodeError::bad_magic: return "bad_magic";
        case DecodeError::bad_version: return "bad_version";
        case DecodeError::unknown_tag: return "unknown_tag";
        case DecodeError::malformed: return "malformed";
        case DecodeError::trailing_bytes: return "trailing_bytes";
    }
    return "?";
}

std::string encode_message(const Message& m) {
    Writer w;
    write_body(w, m);
    return std::move(w.out);
}

std::string encode_envelope(const Envelope& e) {
    Writer w;
    w.u32(kWireMagic);
    w.u8(kWireVersion);
    w.u8(static_cast<std::uint8_t>(e.msg.index()));
    w.str(e.from);
    w.str(e.to);
    w.u64(e.seq);
    std::string body = encode_message(e.msg);
    w.u32(static_cast<std::uint32_t>(body.size()));
    w.out.append(body);
    return std::move(w.out);
}

namespace {

template <std::size_t I = 0>
bool read_body_for_tag(std::size_t tag, Reader& r, Message& out) {
    if constexpr (I >= std::variant_size_v<Message>) {
        (void)tag; (void)r; (void)out;
        return false;
    } else {
        if (tag == I) {
            using T = std::variant_alternative_t<I, Message>;
            T v{};
            if constexpr (std::is_same_v<T, MatchA>) {
                v.round = r.round();
                v.config = r.config();
            } else if constexpr (std::is_same_v<T, MatchB>) {
                v.round = r.round();
                v.gc_watermark = r.round();
                v.history = r.history();
            } else if constexpr (std::is_same_v<T, GarbageA> || std::is_same_v<T, GarbageB> ||
                                 std::is_same_v<T, Nack> || std::is_same_v<T, Heartbeat> ||
                                 std::is_same_v<T, LeaderElect> || std::is_same_v<T, ReconfPhase1A> ||
                                 std::is_same_v<T, ReconfPhase2B>) {
                v.round = r.round();
            } else if constexpr (std::is_same_v<T, Phase1A>) {
                v.round = r.round();
                v.first_slot = r.i64();
            } else if constexpr (std::is_same_v<T, Phase1B>) {
                v.round = r.round();
                std::uint32_t n = r.u32();
                for (std::uint32_t i = 0; i < n && !r.fail; ++i) {
                    Slot s = r.i64();
                    Phase1bVote vote;
                    vote.vr = r.round();
                    vote.vv = r.value();
                    vote.chosen = r.u8() != 0;
                    v.votes.emplace(s, std::move(vote));
                }
            } else if constexpr (std::is_same_v<T, Phase2A>) {
                v.round = r.round();
                v.slot = r.i64();
                v.value = r.value();
                v.any = r.u8() != 0;
            } else if constexpr (std::is_same_v<T, Phase2B>) {
                v.round = r.round();
                v.slot = r.i64();
                v.voted = r.value();
            } else if constexpr (std::is_same_v<T, StopA> || std::is_same_v<T, WatermarkRequest> ||
                                 std::is_same_v<T, ElectCmd> || std::is_same_v<T, StateHashRequest>) {
                // empty body
            } else if constexpr (std::is_same_v<T, StopB>) {
                v.log = r.history();
                v.gc_watermark = r.round();
            } else if constexpr (std::is_same_v<T, Bootstrap>) {
                v.nonce = r.u64();
                v.log = r.history();
                v.gc_watermark = r.round();
            } else if constexpr (std::is_same_v<T, BootstrapAck> || std::is_same_v<T, Activate> ||
                                 std::is_same_v<T, ActivateAck>) {
                v.nonce = r.u64();
            } else if constexpr (std::is_same_v<T, ReconfPhase1B>) {
                v.round = r.round();
                v.vr = r.round();
                v.vv = r.ids();
            } else if constexpr (std::is_same_v<T, ReconfPhase2A>) {
                v.round = r.round();
                v.value = r.ids();
            } else if constexpr (std::is_same_v<T, ClientRequest> || std::is_same_v<T, ClientReply>) {
                v.payload = r.str();
                v.client = r.str();
                v.seq = r.i64();
            } else if constexpr (std::is_same_v<T, Chosen>) {
                v.slot = r.i64();
                v.value = r.value();
            } else if constexpr (std::is_same_v<T, PrefixPersisted>) {
                v.slot = r.i64();
            } else if constexpr (std::is_same_v<T, WatermarkReply>) {
                v.exec_watermark = r.i64();
            } else if constexpr (std::is_same_v<T, CatchupRequest>) {
                v.from = r.i64();
                v.to = r.i64();
            } else if constexpr (std::is_same_v<T, CatchupReply>) {
                std::uint32_t n = r.u32();
                for (std::uint32_t i = 0; i < n && !r.fail; ++i) {
                    Slot s = r.i64();
                    Value val = r.value();
                    v.entries.emplace_back(s, std::move(val));
                }
            } else if constexpr (std::is_same_v<T, ReplayRequest>) {
                v.client = r.str();
                v.seq = r.i64();
            } else if constexpr (std::is_same_v<T, ChosenHint> || std::is_same_v<T, ChosenHintAck>) {
                v.round = r.round();
                v.upto = r.i64();
            } else if constexpr (std::is_same_v<T, ViewChange>) {
                v.version = r.u64();
                v.matchmakers = r.ids();
            } else if constexpr (std::is_same_v<T, RetireNotice>) {
                v.below = r.round();
                v.acceptors = r.ids();
            } else if constexpr (std::is_same_v<T, ReconfigureCmd>) {
                v.config = r.config();
            } else if constexpr (std::is_same_v<T, MmReconfigureCmd>) {
                v.new_matchmakers = r.ids();
            } else if constexpr (std::is_same_v<T, StateHashReply>) {
                v.hash = r.u64();
            }
            out = std::move(v);
            return true;
        }
        return read_body_for_tag<I + 1>(tag, r, out);
    }
}

}  // namespace

std::int64_t frame_size(const char* data, std::size_t len) {
    // magic(4) + version(1) + tag(1) then from/to strings, seq, body_len.
    if (len < 6) return 0;
    std::uint32_t magic = 0;
    std::memcpy(&magic, data, 4);
    std::uint32_t m = 0;
    for (int i = 0; i < 4; ++i) m |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[i])) << (8 * i);
    if (m != kWireMagic) return -1;
    std::size_t off = 6;
    auto read_u32 = [&](std::uint32_t& v) -> bool {
        if (len < off + 4) return false;
        v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[off + i])) << (8 * i);
        off += 4;
        return true;
    };
    std::uint32_t n = 0;
    if (!read_u32(n)) return 0;
    if (len < off + n) return 0;
    off += n;  // from
    if (!read_u32(n)) return 0;
    if (len < off + n) return 0;
    off += n;  // to
    if (len < off + 8) return 0;
    off += 8;  // seq
    if (!read_u32(n)) return 0;
    return static_cast<std::int64_t>(off + n);
}

DecodeResult decode_envelope(const std::string& bytes) {
    DecodeResult res;
    Reader r(bytes.data(), bytes.size());
    std::uint32_t magic = r.u32();
    if (r.fail) {
        res.error = DecodeError::truncated;
        return res;
    }
    if (magic != kWireMagic) {
        res.error = DecodeError::bad_magic;
        return res;
    }
    std::uint8_t version = r.u8();
    std::uint8_t tag = r.u8();
    if (r.fail) {
        res.error = DecodeError::truncated;
        return res;
    }
    if (version != kWireVersion) {
        res.error = DecodeError::bad_version;
        return res;
    }
    res.envelope.from = r.str();
    res.envelope.to = r.str();
    res.envelope.seq = r.u64();
    std::uint32_t body_len = r.u32();
    if (r.fail || static_cast<std::size_t>(r.end - r.p) < body_len) {
        res.error = DecodeError::truncated;
        return res;
    }
    const char* body_end = r.p + body_len;
    if (tag >= std::variant_size_v<Message>) {
        res.error = DecodeError::unknown_tag;
        return res;
    }
    Reader body(r.p, static_cast<std::size_t>(body_end - r.p));
    if (!read_body_for_tag(tag, body, res.envelope.msg) || body.fail) {
        res.error = body.fail ? DecodeError::truncated : DecodeError::unknown_tag;
        return res;
    }
    if (body.p != body.end) {
        res.error = DecodeError::trailing_bytes;
        return res;
    }
    if (body_end != r.end) {
        res.error = DecodeError::trailing_bytes;
        return res;
    }
    return res;
}

std::uint64_t message_digest(const Message& m) {
    Hasher h;
    h.u64(m.index());
    std::string body = encode_message(m);
    h.str(body);
    return h.h;
}

}  // namespace matchpax
