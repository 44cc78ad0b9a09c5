#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "scg/tls_policy.hpp"

namespace scg::tls {

nlohmann::json to_json(const HandshakeProfile& profile);
HandshakeProfile profile_from_json(const nlohmann::json& obj);

// Either a bare JSON array of profiles or {"profiles": [...]}.
std::vector<HandshakeProfile> profiles_from_json_text(const std::string& text);

nlohmann::json to_json(const PolicyDecision& decision);
nlohmann::json to_json(const AuditReport& report);

// Partial overrides on top of a base policy (usually default_policy()).
Policy policy_from_json(const nlohmann::json& obj, Policy base);

} // namespace scg::tls
