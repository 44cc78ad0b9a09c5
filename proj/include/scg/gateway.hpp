#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scg/alerting.hpp"
#include "scg/auth.hpp"
#include "scg/message.hpp"
#include "scg/privacy.hpp"
#include "scg/secure_store.hpp"
#include "scg/tls_policy.hpp"

namespace scg::gateway {

struct BackendConfig {
    std::string host;
    int port = 0;
    Zone zone{ZoneTag::ExternalOperations, "AT"};
    bool persists_data = true;
};

struct UserConfig {
    std::string id;
    std::set<std::string> roles;
};

struct GatewayConfig {
    std::string listen_host = "127.0.0.1";
    int listen_port = 7700;
    BackendConfig backend;
    tls::Policy tls_policy = tls::default_policy();
    std::map<ZoneTag, privacy::ZonePolicy> zone_policies;
    std::int64_t retention_ms = 30ll * 24 * 3600 * 1000;
    std::int64_t clock_skew_ms = kDefaultClockSkewMs;
    alerting::AlertClassMap alert_classes = alerting::default_class_map();
    alerting::RoutingRules routing;
    std::vector<UserConfig> users;
    std::vector<auth::AccessRule> access_rules;
    std::filesystem::path storage_dir;
    crypto::KdfParams kdf;
    std::set<std::string> eu_region_allowlist;
};

GatewayConfig config_from_json_text(const std::string& text);
GatewayConfig config_from_file(const std::filesystem::path& path);

// Startup validation (fail-fast): alert map, backend zone, EU storage rule.
// Throws Error{ConfigError} naming the violation.
void validate_config(const GatewayConfig& config);

// Reads SCG_MASTER_SECRET (hex) from the environment.
crypto::Bytes master_secret_from_env();

// A session exists only for an accepted handshake and an authenticated peer.
class Session {
public:
    const tls::HandshakeProfile& profile() const { return profile_; }
    const auth::Principal& principal() const { return principal_; }
    std::uint64_t frames_handled = 0;

private:
    friend class Gateway;
    Session(tls::HandshakeProfile profile, auth::Principal principal)
        : profile_(std::move(profile)), principal_(std::move(principal)) {}

    tls::HandshakeProfile profile_;
    auth::Principal principal_;
};

// Forwarding target abstraction: surfaces its negotiated channel parameters
// and acknowledges delivered messages.
class BackendChannel {
public:
    virtual ~BackendChannel() = default;
    virtual tls::HandshakeProfile handshake_profile() = 0;
    virtual bool deliver(const Message& msg) = 0; // true once the backend acked
};

class Gateway {
public:
    // Opens storage (deriving the storage key from the master secret), runs
    // crash recovery, and emits the startup security event.
    Gateway(GatewayConfig config, const crypto::Bytes& master_secret);
    ~Gateway();

    const store::RecoveryReport& recovery_report() const { return recovery_; }

    // Policy + authentication gate; the only way to construct a Session.
    Session open_session(const tls::HandshakeProfile& profile, auth::Principal principal);

    Session open_password_session(const tls::HandshakeProfile& profile, const std::string& user,
                                  const std::string& password);

    // Decode, validate, durably enqueue, then ack. Duplicates are re-acked
    // idempotently. Returns the encoded ack or error frame.
    std::vector<std::uint8_t> handle_frame(Session& session, const std::uint8_t* data,
                                           std::size_t size);
    std::vector<std::uint8_t> handle_frame(Session& session,
                                           const std::vector<std::uint8_t>& frame);

    std::size_t forward_pending(BackendChannel& backend);

    bool authorize(const auth::Principal& principal, auth::Action action);

    store::SecureStore& store() { return *store_; }
    auth::CredentialRegistry& users() { return *users_; }
    alerting::AlertRouter& alerts() { return *alerts_; }
    const GatewayConfig& config() const { return config_; }
    const crypto::Bytes& pseudonym_key() const { return pseudonym_key_; }

    void log_event(int severity, const std::string& event);

    // Applies the zone transform a live forward would apply.
    Message transform_for_zone(const Message& msg, ZoneTag zone) const;

private:
    std::vector<std::uint8_t> error_frame(const std::string& reason,
                                          const std::string& ref_id = "");
    std::vector<std::uint8_t> ack_frame(const std::string& ref_id);

    GatewayConfig config_;
    crypto::Bytes pseudonym_key_;
    std::unique_ptr<store::SecureStore> store_;
    std::unique_ptr<auth::CredentialRegistry> users_;
    std::unique_ptr<alerting::AlertRouter> alerts_;
    auth::Authorizer authorizer_;
    store::RecoveryReport recovery_;
};

// Blocking TCP frame server; reads a hello document (profile + credentials),
// gates it through the policy engine and authentication, then relays frames.
int serve(const GatewayConfig& config, const crypto::Bytes& master_secret);

} // namespace scg::gateway
