#include "scg/tls_json.hpp"

#include "scg/errors.hpp"

namespace scg::tls {

using nlohmann::json;

json to_json(const HandshakeProfile& profile) {
    json obj = json::object();
    obj["protocol_version"] = to_string(profile.protocol_version);
    obj["cipher_suite"] = profile.cipher_suite;
    obj["compression_enabled"] = profile.compression_enabled;
    obj["client_certificate_presented"] = profile.client_certificate_presented;
    obj["dh_group_bits"] = profile.dh_group_bits;
    obj["ecdh_curve_bits"] = profile.ecdh_curve_bits;
    obj["downgrade_fallback_offered"] = profile.downgrade_fallback_offered;
    return obj;
}

HandshakeProfile profile_from_json(const json& obj) {
    if (!obj.is_object()) throw Error(ErrorCode::ParseError, "profile must be an object");
    HandshakeProfile profile;
    try {
        std::string version = obj.at("protocol_version").get<std::string>();
        auto parsed = parse_protocol_version(version);
        if (!parsed) throw Error(ErrorCode::ParseError, "unknown protocol version: " + version);
        profile.protocol_version = *parsed;
        profile.cipher_suite = obj.at("cipher_suite").get<std::string>();
        profile.compression_enabled = obj.value("compression_enabled", false);
        profile.client_certificate_presented = obj.value("client_certificate_presented", false);
        profile.dh_group_bits = obj.value("dh_group_bits", 0);
        profile.ecdh_curve_bits = obj.value("ecdh_curve_bits", 0);
        profile.downgrade_fallback_offered = obj.value("downgrade_fallback_offered", false);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    return profile;
}

std::vector<HandshakeProfile> profiles_from_json_text(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::ParseError, "invalid JSON");
    const json* list = &doc;
    if (doc.is_object() && doc.contains("profiles")) list = &doc["profiles"];
    if (!list->is_array()) throw Error(ErrorCode::ParseError, "expected a list of profiles");
    std::vector<HandshakeProfile> profiles;
    for (const auto& item : *list) profiles.push_back(profile_from_json(item));
    return profiles;
}

json to_json(const PolicyDecision& decision) {
    json obj = json::object();
    obj["accepted"] = decision.accepted;
    json violations = json::array();
    for (auto v : decision.violations) violations.push_back(to_string(v));
    obj["violations"] = violations;
    return obj;
}

json to_json(const AuditReport& report) {
    json obj = json::object();
    obj["evaluated"] = report.evaluated;
    obj["accepted"] = report.accepted;
    obj["rejected"] = report.rejected;
    json entries = json::array();
    for (const auto& entry : report.entries) {
        json e = json::object();
        e["profile"] = to_json(entry.profile);
        e["decision"] = to_json(entry.decision);
        entries.push_back(e);
    }
    obj["entries"] = entries;
    return obj;
}

Policy policy_from_json(const json& obj, Policy base) {
    if (!obj.is_object()) throw Error(ErrorCode::ParseError, "policy must be an object");
    if (obj.contains("allowed_suites"))
        base.allowed_suites = obj["allowed_suites"].get<std::vector<std::string>>();
    if (obj.contains("min_version")) {
        auto parsed = parse_protocol_version(obj["min_version"].get<std::string>());
        if (!parsed) throw Error(ErrorCode::ParseError, "unknown min_version");
        base.min_version = *parsed;
    }
    base.require_mutual_auth = obj.value("require_mutual_auth", base.require_mutual_auth);
    base.forbid_compression = obj.value("forbid_compression", base.forbid_compression);
    base.min_dh_bits = obj.value("min_dh_bits", base.min_dh_bits);
    base.min_ecdh_bits = obj.value("min_ecdh_bits", base.min_ecdh_bits);
    base.min_symmetric_bits = obj.value("min_symmetric_bits", base.min_symmetric_bits);
    base.min_block_bits = obj.value("min_block_bits", base.min_block_bits);
    base.forbid_static_keys = obj.value("forbid_static_keys", base.forbid_static_keys);
    base.strict = obj.value("strict", base.strict);
    return base;
}

} // namespace scg::tls
