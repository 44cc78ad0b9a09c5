#include "scg/message.hpp"

#include <cctype>
#include <random>

#include <json.hpp>
#include <sodium.h>

#include "scg/errors.hpp"

namespace scg {

using nlohmann::json;

const char* to_string(MessageKind kind) {
    switch (kind) {
    case MessageKind::Measurement: return "measurement";
    case MessageKind::Fault: return "fault";
    case MessageKind::Warning: return "warning";
    case MessageKind::Ack: return "ack";
    case MessageKind::Control: return "control";
    }
    return "?";
}

std::optional<MessageKind> parse_message_kind(const std::string& text) {
    if (text == "measurement") return MessageKind::Measurement;
    if (text == "fault") return MessageKind::Fault;
    if (text == "warning") return MessageKind::Warning;
    if (text == "ack") return MessageKind::Ack;
    if (text == "control") return MessageKind::Control;
    return std::nullopt;
}

const char* to_string(ZoneTag tag) {
    switch (tag) {
    case ZoneTag::Premises: return "premises";
    case ZoneTag::ExternalOperations: return "external_operations";
    case ZoneTag::ThirdParty: return "third_party";
    }
    return "?";
}

std::optional<ZoneTag> parse_zone_tag(const std::string& text) {
    if (text == "premises") return ZoneTag::Premises;
    if (text == "external_operations") return ZoneTag::ExternalOperations;
    if (text == "third_party") return ZoneTag::ThirdParty;
    return std::nullopt;
}

bool is_uuid_v4(const std::string& s) {
    // 8-4-4-4-12 lowercase/uppercase hex, version nibble 4, variant in {8,9,a,b}.
    if (s.size() != 36) return false;
    for (std::size_t i = 0; i < 36; ++i) {
        if (i == 8 || i == 13 || i == 18 || i == 23) {
            if (s[i] != '-') return false;
        } else if (!std::isxdigit(static_cast<unsigned char>(s[i]))) {
            return false;
        }
    }
    if (s[14] != '4') return false;
    char v = static_cast<char>(std::tolower(static_cast<unsigned char>(s[19])));
    return v == '8' || v == '9' || v == 'a' || v == 'b';
}

std::string generate_uuid_v4() {
    unsigned char raw[16];
    randombytes_buf(raw, sizeof raw);
    raw[6] = static_cast<unsigned char>((raw[6] & 0x0f) | 0x40);
    raw[8] = static_cast<unsigned char>((raw[8] & 0x3f) | 0x80);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(36);
    for (int i = 0; i < 16; ++i) {
        if (i == 4 || i == 6 || i == 8 || i == 10) out.push_back('-');
        out.push_back(hex[raw[i] >> 4]);
        out.push_back(hex[raw[i] & 0x0f]);
    }
    return out;
}

namespace {

json body_to_json(const std::map<std::string, Scalar>& body) {
    json obj = json::object();
    for (const auto& [key, value] : body) {
        std::visit([&](const auto& v) { obj[key] = v; }, value);
    }
    return obj;
}

Scalar scalar_from_json(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) return v.get<double>();
    throw Error(ErrorCode::ValidationError, "body values must be scalars");
}

} // namespace

void validate_message(const Message& msg, std::optional<UtcMillis> now, std::int64_t skew_ms) {
    if (!is_uuid_v4(msg.id))
        throw Error(ErrorCode::ValidationError, "id is not a UUID v4: " + msg.id);
    if (msg.device.empty() || msg.device.size() > kMaxDeviceLen)
        throw Error(ErrorCode::ValidationError, "device must be 1..128 chars");
    if (msg.proto_version != 1)
        throw Error(ErrorCode::ValidationError,
                    "unsupported proto_version " + std::to_string(msg.proto_version));
    if (now && msg.ts > *now + skew_ms)
        throw Error(ErrorCode::ValidationError,
                    "timestamp too far in the future: " + format_rfc3339(msg.ts));
    std::string body_text = body_to_json(msg.body).dump();
    if (body_text.size() > kMaxBodyBytes)
        throw Error(ErrorCode::ValidationError, "body exceeds 64 KiB canonical-encoded");
}

std::string canonical_encode(const Message& msg) {
    // nlohmann::json's default object representation is a std::map, so dump()
    // emits keys in sorted order with no whitespace.
    json obj = json::object();
    obj["body"] = body_to_json(msg.body);
    obj["device"] = msg.device;
    obj["id"] = msg.id;
    obj["kind"] = to_string(msg.kind);
    obj["proto_version"] = msg.proto_version;
    obj["ts"] = format_rfc3339(msg.ts);
    return obj.dump();
}

Message canonical_decode(const std::string& text) {
    json obj = json::parse(text, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
        throw Error(ErrorCode::ParseError, "payload is not a JSON object");
    Message msg;
    try {
        msg.id = obj.at("id").get<std::string>();
        std::string kind = obj.at("kind").get<std::string>();
        auto parsed = parse_message_kind(kind);
        if (!parsed)
            throw Error(ErrorCode::ValidationError, "unknown message kind: " + kind);
        msg.kind = *parsed;
        msg.device = obj.at("device").get<std::string>();
        msg.ts = parse_rfc3339(obj.at("ts").get<std::string>());
        msg.proto_version = obj.at("proto_version").get<int>();
        const json& body = obj.at("body");
        if (!body.is_object())
            throw Error(ErrorCode::ParseError, "body must be an object");
        for (auto it = body.begin(); it != body.end(); ++it)
            msg.body.emplace(it.key(), scalar_from_json(it.value()));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    validate_message(msg);
    return msg;
}

std::vector<std::uint8_t> encode_frame(const Message& msg) {
    std::string payload = canonical_encode(msg);
    if (payload.size() > kMaxFramePayload)
        throw Error(ErrorCode::FrameTooLarge,
                    "payload is " + std::to_string(payload.size()) + " bytes");
    validate_message(msg);
    std::vector<std::uint8_t> out;
    out.reserve(4 + payload.size());
    std::uint32_t len = static_cast<std::uint32_t>(payload.size());
    out.push_back(static_cast<std::uint8_t>(len >> 24));
    out.push_back(static_cast<std::uint8_t>(len >> 16));
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.push_back(static_cast<std::uint8_t>(len));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

FrameDecode decode_frame(const std::uint8_t* data, std::size_t size) {
    if (size < 4) throw Error(ErrorCode::Incomplete, "frame header truncated");
    std::uint32_t len = (static_cast<std::uint32_t>(data[0]) << 24) |
                        (static_cast<std::uint32_t>(data[1]) << 16) |
                        (static_cast<std::uint32_t>(data[2]) << 8) |
                        static_cast<std::uint32_t>(data[3]);
    if (len > kMaxFramePayload)
        throw Error(ErrorCode::FrameTooLarge, "declared length " + std::to_string(len));
    if (size < 4 + static_cast<std::size_t>(len))
        throw Error(ErrorCode::Incomplete, "frame payload truncated");
    std::string payload(reinterpret_cast<const char*>(data + 4), len);
    return FrameDecode{canonical_decode(payload), 4 + static_cast<std::size_t>(len)};
}

FrameDecode decode_frame(const std::vector<std::uint8_t>& data) {
    return decode_frame(data.data(), data.size());
}

} // namespace scg
