#include "scg/auth.hpp"

#include <sodium.h>

#include <fstream>

#include <json.hpp>

#include "scg/errors.hpp"

namespace scg::auth {

using nlohmann::json;
using crypto::Bytes;

const char* to_string(Action action) {
    switch (action) {
    case Action::ViewStatus: return "view_status";
    case Action::ViewAlerts: return "view_alerts";
    case Action::Configure: return "configure";
    case Action::SendControl: return "send_control";
    case Action::ManageUsers: return "manage_users";
    }
    return "?";
}

std::optional<Action> parse_action(const std::string& text) {
    if (text == "view_status") return Action::ViewStatus;
    if (text == "view_alerts") return Action::ViewAlerts;
    if (text == "configure") return Action::Configure;
    if (text == "send_control") return Action::SendControl;
    if (text == "manage_users") return Action::ManageUsers;
    return std::nullopt;
}

namespace {

std::string tbs_text(const Certificate& cert) {
    json obj = json::object();
    obj["issuer"] = cert.issuer;
    obj["not_after"] = format_rfc3339(cert.not_after);
    obj["not_before"] = format_rfc3339(cert.not_before);
    obj["public_key"] = crypto::to_hex(cert.public_key);
    obj["subject"] = cert.subject;
    return obj.dump();
}

bool verify_signature(const Certificate& cert, const Bytes& signer_public) {
    if (signer_public.size() != crypto_sign_PUBLICKEYBYTES ||
        cert.signature.size() != crypto_sign_BYTES)
        return false;
    std::string tbs = tbs_text(cert);
    return crypto_sign_verify_detached(cert.signature.data(),
                                       reinterpret_cast<const unsigned char*>(tbs.data()),
                                       tbs.size(), signer_public.data()) == 0;
}

} // namespace

std::string Certificate::to_json() const {
    json obj = json::object();
    obj["issuer"] = issuer;
    obj["not_after"] = format_rfc3339(not_after);
    obj["not_before"] = format_rfc3339(not_before);
    obj["public_key"] = crypto::to_hex(public_key);
    obj["signature"] = crypto::to_hex(signature);
    obj["subject"] = subject;
    return obj.dump();
}

Certificate Certificate::from_json(const std::string& text) {
    json obj = json::parse(text, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
        throw Error(ErrorCode::ParseError, "certificate is not a JSON object");
    try {
        Certificate cert;
        cert.subject = obj.at("subject").get<std::string>();
        cert.issuer = obj.at("issuer").get<std::string>();
        cert.not_before = parse_rfc3339(obj.at("not_before").get<std::string>());
        cert.not_after = parse_rfc3339(obj.at("not_after").get<std::string>());
        cert.public_key = crypto::from_hex(obj.at("public_key").get<std::string>());
        cert.signature = crypto::from_hex(obj.at("signature").get<std::string>());
        return cert;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

std::set<std::string> roles_from_subject(const std::string& subject) {
    std::set<std::string> roles;
    std::size_t pos = 0;
    while (pos <= subject.size()) {
        std::size_t end = subject.find(',', pos);
        if (end == std::string::npos) end = subject.size();
        std::string attr = subject.substr(pos, end - pos);
        if (attr.rfind("role=", 0) == 0 && attr.size() > 5) roles.insert(attr.substr(5));
        pos = end + 1;
    }
    return roles;
}

KeyPair generate_keypair() {
    if (sodium_init() < 0) throw Error(ErrorCode::IoError, "libsodium init failed");
    KeyPair pair;
    pair.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    pair.secret_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_keypair(pair.public_key.data(), pair.secret_key.data());
    return pair;
}

Certificate make_certificate(const std::string& subject, const std::string& issuer,
                             const Bytes& subject_public, const Bytes& issuer_secret,
                             UtcMillis not_before, UtcMillis not_after) {
    Certificate cert;
    cert.subject = subject;
    cert.issuer = issuer;
    cert.not_before = not_before;
    cert.not_after = not_after;
    cert.public_key = subject_public;
    std::string tbs = tbs_text(cert);
    cert.signature.resize(crypto_sign_BYTES);
    crypto_sign_detached(cert.signature.data(), nullptr,
                         reinterpret_cast<const unsigned char*>(tbs.data()), tbs.size(),
                         issuer_secret.data());
    return cert;
}

Principal authenticate_certificate(const std::vector<Certificate>& chain,
                                   const std::vector<Certificate>& trust_anchors,
                                   std::optional<UtcMillis> now) {
    if (chain.empty()) throw Error(ErrorCode::UntrustedChain, "empty certificate chain");
    UtcMillis at = now.value_or(now_utc_millis());

    for (const auto& cert : chain)
        if (at < cert.not_before || at > cert.not_after)
            throw Error(ErrorCode::Expired, "certificate outside validity window: " + cert.subject);

    // Each link must be signed by the next one's key; the tail must be signed
    // by (or be) a trust anchor.
    for (std::size_t i = 0; i + 1 < chain.size(); ++i)
        if (!verify_signature(chain[i], chain[i + 1].public_key))
            throw Error(ErrorCode::UntrustedChain, "broken chain at " + chain[i].subject);

    const Certificate& tail = chain.back();
    bool anchored = false;
    for (const auto& anchor : trust_anchors) {
        if (verify_signature(tail, anchor.public_key)) {
            anchored = true;
            break;
        }
    }
    if (!anchored)
        throw Error(ErrorCode::UntrustedChain, "chain does not reach a trust anchor");

    auto roles = roles_from_subject(chain.front().subject);
    if (roles.empty())
        throw Error(ErrorCode::NoRoleAttribute, "no role attribute in " + chain.front().subject);

    Principal principal;
    principal.id = chain.front().subject;
    principal.auth_mode = AuthMode::Certificate;
    principal.roles = std::move(roles);
    principal.authenticated_at = at;
    return principal;
}

CredentialRegistry::CredentialRegistry(const std::filesystem::path& file,
                                       std::size_t min_password_length)
    : file_(file), min_password_length_(min_password_length) {
    // Cheap params for the decoy derivation: timing equalization only.
    dummy_params_.salt = crypto::random_bytes(16);
    dummy_params_.memory_cost = 8;
    dummy_params_.time_cost = 1;
    dummy_params_.output_bits = 256;
    dummy_verifier_ = crypto::random_bytes(32);

    std::ifstream in(file_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded()) continue;
        CredentialRecord rec;
        rec.user_id = obj.value("id", "");
        rec.kdf.salt = crypto::from_hex(obj.value("salt", ""));
        rec.kdf.memory_cost = obj.value("memory_cost", 0u);
        rec.kdf.time_cost = obj.value("time_cost", 0u);
        rec.kdf.parallelism = obj.value("parallelism", 1u);
        rec.kdf.output_bits = obj.value("output_bits", 0u);
        rec.verifier = crypto::from_hex(obj.value("verifier", ""));
        for (const auto& r : obj.value("roles", std::vector<std::string>{})) rec.roles.insert(r);
        if (!rec.user_id.empty()) users_.emplace(rec.user_id, std::move(rec));
    }
}

void CredentialRegistry::persist() {
    auto tmp = file_;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write credential store");
        for (const auto& [id, rec] : users_) {
            json obj = json::object();
            obj["id"] = rec.user_id;
            obj["salt"] = crypto::to_hex(rec.kdf.salt);
            obj["memory_cost"] = rec.kdf.memory_cost;
            obj["time_cost"] = rec.kdf.time_cost;
            obj["parallelism"] = rec.kdf.parallelism;
            obj["output_bits"] = rec.kdf.output_bits;
            obj["verifier"] = crypto::to_hex(rec.verifier);
            obj["roles"] = rec.roles;
            out << obj.dump() << '\n';
        }
    }
    std::filesystem::rename(tmp, file_);
}

CredentialRecord CredentialRegistry::register_user(const std::string& id,
                                                   const std::string& password,
                                                   const std::set<std::string>& roles,
                                                   const crypto::KdfParams& params) {
    if (id.empty()) throw Error(ErrorCode::ValidationError, "empty user id");
    if (password.size() < min_password_length_)
        throw Error(ErrorCode::PolicyViolation,
                    "password must be at least " + std::to_string(min_password_length_) +
                        " characters");
    std::lock_guard lock(mutex_);
    if (users_.count(id)) throw Error(ErrorCode::PolicyViolation, "duplicate user id: " + id);

    CredentialRecord rec;
    rec.user_id = id;
    rec.kdf = params;
    if (rec.kdf.salt.size() != 16) rec.kdf.salt = crypto::random_bytes(16);
    Bytes secret(password.begin(), password.end());
    rec.verifier = crypto::derive_key(secret, rec.kdf);
    rec.roles = roles;
    users_.emplace(id, rec);
    persist();
    return rec;
}

Principal CredentialRegistry::authenticate_password(const std::string& id,
                                                    const std::string& password) {
    std::lock_guard lock(mutex_);
    Bytes secret(password.begin(), password.end());
    auto it = users_.find(id);
    if (it == users_.end()) {
        // Burn a derivation so unknown-user and wrong-password take the same
        // path, then fail identically.
        crypto::Bytes candidate = crypto::derive_key(secret, dummy_params_);
        crypto::constant_time_equal(candidate, dummy_verifier_);
        throw Error(ErrorCode::AuthFailed, "authentication failed");
    }
    Bytes candidate = crypto::derive_key(secret, it->second.kdf);
    if (!crypto::constant_time_equal(candidate, it->second.verifier))
        throw Error(ErrorCode::AuthFailed, "authentication failed");
    Principal principal;
    principal.id = id;
    principal.auth_mode = AuthMode::Password;
    principal.roles = it->second.roles;
    principal.authenticated_at = now_utc_millis();
    return principal;
}

bool CredentialRegistry::has_user(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return users_.count(id) != 0;
}

Authorizer::Authorizer(std::vector<AccessRule> rules) : rules_(std::move(rules)) {}

bool Authorizer::authorize(const Principal& principal, Action action) const {
    for (const auto& rule : rules_) {
        if (rule.allow && rule.action == action && principal.roles.count(rule.role)) return true;
    }
    return false;
}

} // namespace scg::auth
