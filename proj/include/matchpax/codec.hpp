#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "matchpax/messages.hpp"

namespace matchpax {

// Binary wire format, little-endian, canonical (map entries in key order, so
// encoding a message twice yields identical bytes).
//
//   frame := magic u32 ("MPX1") | version u8 | tag u8 |
//            from str | to str | seq u64 | body_len u32 | body
//
// Journal records and the simulator's state digests reuse the same body
// encoding.

inline constexpr std::uint32_t kWireMagic = 0x3158504d;  // "MPX1"
inline constexpr std::uint8_t kWireVersion = 1;

enum class DecodeError {
    none,
    truncated,
    bad_magic,
    bad_version,
    unknown_tag,
    malformed,
    trailing_bytes,
};

const char* decode_error_name(DecodeError e);

std::string encode_message(const Message& m);   // body only (canonical)
std::string encode_envelope(const Envelope& e); // full frame

struct DecodeResult {
    DecodeError error = DecodeError::none;
    Envelope envelope;
    bool ok() const { return error == DecodeError::none; }
};

// Decodes one full frame; the buffer must contain exactly one frame.
DecodeResult decode_envelope(const std::string& bytes);

// Incremental framing helper: returns the total frame size once the header
// is available, or 0 if more bytes are needed, or -1 on a corrupt header.
std::int64_t frame_size(const char* data, std::size_t len);

std::uint64_t message_digest(const Message& m);

}  // namespace matchpax
