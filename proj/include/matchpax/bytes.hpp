#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matchpax/config.hpp"
#include "matchpax/messages.hpp"
#include "matchpax/types.hpp"

namespace matchpax {

// Little-endian canonical byte building, shared by the wire codec, journal
// records and state digests.
struct ByteWriter {
    std::string out;

    void u8(std::uint8_t v) { out.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out.append(s);
    }
    void round(const Round& r) {
        i64(r.counter);
        str(r.owner);
        i64(r.sub);
    }
    void value(const Value& v) {
        u8(static_cast<std::uint8_t>(v.kind));
        str(v.payload);
    }
    void ids(const std::vector<NodeId>& v) {
        u32(static_cast<std::uint32_t>(v.size()));
        for (const auto& s : v) str(s);
    }
    void config(const Configuration& c) {
        str(c.label);
        ids(c.acceptors);
        u32(static_cast<std::uint32_t>(c.phase1_quorums.size()));
        for (const auto& q : c.phase1_quorums) ids(q);
        u32(static_cast<std::uint32_t>(c.phase2_quorums.size()));
        for (const auto& q : c.phase2_quorums) ids(q);
    }
    void history(const ConfigHistory& h) {
        u32(static_cast<std::uint32_t>(h.size()));
        for (const auto& [r, c] : h) {
            round(r);
            config(c);
        }
    }
};

struct ByteReader {
    const char* p;
    const char* end;
    bool fail = false;

    ByteReader(const char* data, std::size_t len) : p(data), end(data + len) {}
    explicit ByteReader(const std::string& s) : ByteReader(s.data(), s.size()) {}

    bool need(std::size_t n) {
        if (static_cast<std::size_t>(end - p) < n) {
            fail = true;
            return false;
        }
        return true;
    }
    std::uint8_t u8() {
        if (!need(1)) return 0;
        return static_cast<std::uint8_t>(*p++);
    }
    std::uint32_t u32() {
        if (!need(4)) return 0;
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(*p++)) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        if (!need(8)) return 0;
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(*p++)) << (8 * i);
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    std::string str() {
        std::uint32_t n = u32();
        if (!need(n)) return {};
        std::string s(p, p + n);
        p += n;
        return s;
    }
    Round round() {
        Round r;
        r.counter = i64();
        r.owner = str();
        r.sub = i64();
        return r;
    }
    Value value() {
        Value v;
        std::uint8_t k = u8();
        if (k > 1) fail = true;
        v.kind = static_cast<ValueKind>(k);
        v.payload = str();
        return v;
    }
    std::vector<NodeId> ids() {
        std::uint32_t n = u32();
        std::vector<NodeId> v;
        for (std::uint32_t i = 0; i < n && !fail; ++i) v.push_back(str());
        return v;
    }
    Configuration config() {
        Configuration c;
        c.label = str();
        c.acceptors = ids();
        std::uint32_t n1 = u32();
        for (std::uint32_t i = 0; i < n1 && !fail; ++i) c.phase1_quorums.push_back(ids());
        std::uint32_t n2 = u32();
        for (std::uint32_t i = 0; i < n2 && !fail; ++i) c.phase2_quorums.push_back(ids());
        return c;
    }
    ConfigHistory history() {
        std::uint32_t n = u32();
        ConfigHistory h;
        for (std::uint32_t i = 0; i < n && !fail; ++i) {
            Round r = round();
            Configuration c = config();
            h.emplace_back(std::move(r), std::move(c));
        }
        return h;
    }
};

}  // namespace matchpax
