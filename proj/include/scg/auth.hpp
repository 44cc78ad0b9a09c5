#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scg/crypto.hpp"
#include "scg/timeutil.hpp"

namespace scg::auth {

enum class AuthMode { Password, Certificate };

struct Principal {
    std::string id;
    AuthMode auth_mode = AuthMode::Password;
    std::set<std::string> roles;
    UtcMillis authenticated_at = 0;
};

enum class Action { ViewStatus, ViewAlerts, Configure, SendControl, ManageUsers };

const char* to_string(Action action);
std::optional<Action> parse_action(const std::string& text);

struct AccessRule {
    std::string role;
    Action action = Action::ViewStatus;
    bool allow = false;
};

inline constexpr std::size_t kMinPasswordLength = 12;

struct CredentialRecord {
    std::string user_id;
    crypto::KdfParams kdf;
    crypto::Bytes verifier;
    std::set<std::string> roles;
};

// Deliberately lightweight certificate: an Ed25519-signed attribute document.
// The chain is leaf-first; each certificate is signed by its issuer's key and
// the last one must chain to (or be) a configured trust anchor. Roles are
// carried as repeatable "role=<name>" subject attributes.
struct Certificate {
    std::string subject; // e.g. "CN=gw-01,role=dso-operator"
    std::string issuer;
    UtcMillis not_before = 0;
    UtcMillis not_after = 0;
    crypto::Bytes public_key; // Ed25519, 32 bytes
    crypto::Bytes signature;  // by the issuer key, over the canonical TBS text

    std::string to_json() const;
    static Certificate from_json(const std::string& text);
};

std::set<std::string> roles_from_subject(const std::string& subject);

// Test-fixture CA helpers.
struct KeyPair {
    crypto::Bytes public_key;
    crypto::Bytes secret_key;
};

KeyPair generate_keypair();
Certificate make_certificate(const std::string& subject, const std::string& issuer,
                             const crypto::Bytes& subject_public, const crypto::Bytes& issuer_secret,
                             UtcMillis not_before, UtcMillis not_after);

Principal authenticate_certificate(const std::vector<Certificate>& chain,
                                   const std::vector<Certificate>& trust_anchors,
                                   std::optional<UtcMillis> now = std::nullopt);

// Password-backed user registry. Credentials persist in one file under the
// secure-store data directory; passwords are never stored, only Argon2id
// verifiers.
class CredentialRegistry {
public:
    explicit CredentialRegistry(const std::filesystem::path& file,
                                std::size_t min_password_length = kMinPasswordLength);

    CredentialRecord register_user(const std::string& id, const std::string& password,
                                   const std::set<std::string>& roles,
                                   const crypto::KdfParams& params);

    // Uniform failure: unknown user and wrong password raise byte-identical
    // Error{AuthFailed} values.
    Principal authenticate_password(const std::string& id, const std::string& password);

    bool has_user(const std::string& id) const;

private:
    void persist();

    std::filesystem::path file_;
    std::size_t min_password_length_;
    mutable std::mutex mutex_;
    std::map<std::string, CredentialRecord> users_;
    crypto::KdfParams dummy_params_;
    crypto::Bytes dummy_verifier_; // equalizes timing for unknown users
};

class Authorizer {
public:
    Authorizer() = default;
    explicit Authorizer(std::vector<AccessRule> rules);

    // Default-deny: allow only when some role of the principal has an
    // explicit allow rule for the action.
    bool authorize(const Principal& principal, Action action) const;

private:
    std::vector<AccessRule> rules_;
};

} // namespace scg::auth
