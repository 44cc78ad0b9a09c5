#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "scg/timeutil.hpp"

namespace scg {

enum class MessageKind { Measurement, Fault, Warning, Ack, Control };

const char* to_string(MessageKind kind);
std::optional<MessageKind> parse_message_kind(const std::string& text);

// Scalar body values: strings, integers, reals, booleans.
using Scalar = std::variant<std::string, std::int64_t, double, bool>;

struct Message {
    std::string id;  // UUID v4
    MessageKind kind = MessageKind::Measurement;
    std::string device;
    UtcMillis ts = 0;
    std::map<std::string, Scalar> body;
    int proto_version = 1;

    bool operator==(const Message&) const = default;
};

enum class ZoneTag { Premises, ExternalOperations, ThirdParty };

const char* to_string(ZoneTag tag);
std::optional<ZoneTag> parse_zone_tag(const std::string& text);

struct Zone {
    ZoneTag tag = ZoneTag::Premises;
    std::string region; // ISO 3166 alpha-2 country code

    bool in_region_allowlist(const std::set<std::string>& allowlist) const {
        return allowlist.count(region) != 0;
    }
};

inline constexpr std::size_t kMaxFramePayload = 1u << 20;   // 1 MiB
inline constexpr std::size_t kMaxBodyBytes = 64u * 1024;    // 64 KiB canonical-encoded
inline constexpr std::size_t kMaxDeviceLen = 128;
inline constexpr std::int64_t kDefaultClockSkewMs = 300'000; // 300 s

bool is_uuid_v4(const std::string& s);
std::string generate_uuid_v4();

// Validates all Message invariants. `now` bounds the future-timestamp check;
// pass std::nullopt to skip it (stored records are re-validated on decode,
// long after their send time).
void validate_message(const Message& msg, std::optional<UtcMillis> now = std::nullopt,
                      std::int64_t skew_ms = kDefaultClockSkewMs);

// Deterministic encoding: JSON object with lexicographically sorted keys and
// no insignificant whitespace. Equal messages yield identical bytes.
std::string canonical_encode(const Message& msg);

Message canonical_decode(const std::string& text);

// 4-byte big-endian length prefix followed by the canonical payload.
std::vector<std::uint8_t> encode_frame(const Message& msg);

struct FrameDecode {
    Message message;
    std::size_t consumed; // bytes of input used; trailing bytes belong to the next frame
};

FrameDecode decode_frame(const std::uint8_t* data, std::size_t size);
FrameDecode decode_frame(const std::vector<std::uint8_t>& data);

} // namespace scg
