#include "scg/gateway.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "scg/errors.hpp"
#include "scg/tls_json.hpp"

namespace scg::gateway {

using nlohmann::json;
using crypto::Bytes;

namespace {

privacy::ZonePolicy zone_policy_from_json(const json& obj) {
    privacy::ZonePolicy policy;
    std::string tag = obj.value("zone", "");
    auto parsed = parse_zone_tag(tag);
    if (!parsed) throw Error(ErrorCode::ConfigError, "unknown zone tag: " + tag);
    policy.zone = *parsed;
    policy.release_mode = privacy::release_mode_for(policy.zone);
    if (obj.contains("allowlist"))
        for (const auto& f : obj["allowlist"]) policy.field_allowlist.insert(f.get<std::string>());
    if (obj.contains("transforms")) {
        for (auto it = obj["transforms"].begin(); it != obj["transforms"].end(); ++it) {
            std::string t = it.value().get<std::string>();
            privacy::FieldTransform transform;
            if (t == "pass")
                transform = privacy::FieldTransform::Pass;
            else if (t == "pseudonymize")
                transform = privacy::FieldTransform::Pseudonymize;
            else if (t == "drop")
                transform = privacy::FieldTransform::Drop;
            else
                throw Error(ErrorCode::ConfigError, "unknown transform: " + t);
            policy.transforms[it.key()] = transform;
        }
    }
    return policy;
}

} // namespace

GatewayConfig config_from_json_text(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw Error(ErrorCode::ConfigError, "config is not a JSON object");
    GatewayConfig config;
    try {
        if (doc.contains("listen")) {
            config.listen_host = doc["listen"].value("host", config.listen_host);
            config.listen_port = doc["listen"].value("port", config.listen_port);
        }
        if (doc.contains("backend")) {
            const json& b = doc["backend"];
            config.backend.host = b.value("host", "");
            config.backend.port = b.value("port", 0);
            config.backend.persists_data = b.value("persists_data", true);
            if (b.contains("zone")) {
                std::string tag = b["zone"].value("tag", "");
                auto parsed = parse_zone_tag(tag);
                if (!parsed) throw Error(ErrorCode::ConfigError, "unknown backend zone: " + tag);
                config.backend.zone.tag = *parsed;
                config.backend.zone.region = b["zone"].value("region", "");
            }
        }
        if (doc.contains("tls_policy"))
            config.tls_policy = tls::policy_from_json(doc["tls_policy"], tls::default_policy());
        if (doc.contains("zone_policies"))
            for (const auto& zp : doc["zone_policies"]) {
                auto policy = zone_policy_from_json(zp);
                config.zone_policies[policy.zone] = policy;
            }
        if (doc.contains("retention_days"))
            config.retention_ms = doc["retention_days"].get<std::int64_t>() * 24 * 3600 * 1000;
        if (doc.contains("clock_skew_s"))
            config.clock_skew_ms = doc["clock_skew_s"].get<std::int64_t>() * 1000;
        if (doc.contains("alert_classes")) {
            config.alert_classes.classes.clear();
            for (const auto& c : doc["alert_classes"])
                config.alert_classes.classes.push_back({c.value("name", ""),
                                                        c.value("low", -1), c.value("high", -1)});
        }
        if (doc.contains("routing")) {
            const json& r = doc["routing"];
            if (r.contains("classes"))
                for (auto it = r["classes"].begin(); it != r["classes"].end(); ++it)
                    for (const auto& role : it.value())
                        config.routing.class_roles[it.key()].insert(role.get<std::string>());
            if (r.contains("channels"))
                for (auto it = r["channels"].begin(); it != r["channels"].end(); ++it)
                    for (const auto& ch : it.value()) {
                        auto parsed = alerting::parse_channel(ch.get<std::string>());
                        if (!parsed)
                            throw Error(ErrorCode::ConfigError,
                                        "unknown channel: " + ch.get<std::string>());
                        config.routing.role_channels[it.key()].insert(*parsed);
                    }
        }
        if (doc.contains("users"))
            for (const auto& u : doc["users"]) {
                UserConfig uc;
                uc.id = u.value("id", "");
                for (const auto& role : u.value("roles", std::vector<std::string>{}))
                    uc.roles.insert(role);
                config.users.push_back(uc);
            }
        if (doc.contains("access_rules"))
            for (const auto& r : doc["access_rules"]) {
                auto action = auth::parse_action(r.value("action", ""));
                if (!action)
                    throw Error(ErrorCode::ConfigError,
                                "unknown action: " + r.value("action", ""));
                config.access_rules.push_back({r.value("role", ""), *action, r.value("allow", false)});
            }
        if (doc.contains("storage_dir"))
            config.storage_dir = doc["storage_dir"].get<std::string>();
        if (doc.contains("kdf")) {
            const json& k = doc["kdf"];
            config.kdf.memory_cost = k.value("memory_cost_kib", config.kdf.memory_cost);
            config.kdf.time_cost = k.value("time_cost", config.kdf.time_cost);
            config.kdf.parallelism = k.value("parallelism", config.kdf.parallelism);
            config.kdf.output_bits = k.value("output_bits", config.kdf.output_bits);
            if (k.contains("salt")) config.kdf.salt = crypto::from_hex(k["salt"].get<std::string>());
        }
        if (doc.contains("eu_region_allowlist"))
            for (const auto& c : doc["eu_region_allowlist"])
                config.eu_region_allowlist.insert(c.get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    return config;
}

GatewayConfig config_from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

void validate_config(const GatewayConfig& config) {
    auto violations = alerting::validate_class_map(config.alert_classes);
    if (!violations.empty()) {
        std::string names;
        for (auto v : violations) {
            if (!names.empty()) names += ", ";
            names += alerting::to_string(v);
        }
        throw Error(ErrorCode::ConfigError, "invalid alert class map: " + names);
    }
    if (config.backend.zone.tag == ZoneTag::Premises)
        throw Error(ErrorCode::ConfigError,
                    "backend zone must be external_operations or third_party");
    if (config.backend.persists_data &&
        !config.backend.zone.in_region_allowlist(config.eu_region_allowlist))
        throw Error(ErrorCode::ConfigError,
                    "backend persists data but region '" + config.backend.zone.region +
                        "' is not in the EU storage allowlist");
    if (config.storage_dir.empty())
        throw Error(ErrorCode::ConfigError, "storage_dir is required");
}

Bytes master_secret_from_env() {
    const char* hex = std::getenv("SCG_MASTER_SECRET");
    if (!hex || !*hex)
        throw Error(ErrorCode::ConfigError, "SCG_MASTER_SECRET is not set");
    return crypto::from_hex(hex);
}

Gateway::Gateway(GatewayConfig config, const Bytes& master_secret) : config_(std::move(config)) {
    validate_config(config_);
    std::filesystem::create_directories(config_.storage_dir);

    // Stable per-deployment KDF salt, generated on first start.
    crypto::KdfParams params = config_.kdf;
    if (params.salt.size() != 16) {
        auto salt_path = config_.storage_dir / "kdf_salt";
        std::ifstream in(salt_path);
        std::string hex;
        if (in && std::getline(in, hex) && hex.size() == 32) {
            params.salt = crypto::from_hex(hex);
        } else {
            params.salt = crypto::random_bytes(16);
            std::ofstream out(salt_path, std::ios::trunc);
            out << crypto::to_hex(params.salt) << '\n';
        }
    }
    Bytes storage_key = crypto::derive_key(master_secret, params);
    pseudonym_key_ = crypto::derive_subkey(storage_key, "scg:pseudonym");

    store_ = std::make_unique<store::SecureStore>(config_.storage_dir, storage_key);
    users_ = std::make_unique<auth::CredentialRegistry>(config_.storage_dir / "credentials.jsonl");
    alerts_ = std::make_unique<alerting::AlertRouter>(config_.alert_classes, config_.routing,
                                                      config_.storage_dir / "outbox.jsonl");
    authorizer_ = auth::Authorizer(config_.access_rules);

    recovery_ = store_->recover();
    log_event(5, "gateway started (restored " + std::to_string(recovery_.restored) +
                     ", pending " + std::to_string(recovery_.pending) + ")");
}

Gateway::~Gateway() {
    try {
        log_event(5, "gateway shutting down");
    } catch (...) {
    }
}

void Gateway::log_event(int severity, const std::string& event) {
    auto entry = store_->append_log(severity, event);
    alerts_->route(entry);
}

Session Gateway::open_session(const tls::HandshakeProfile& profile, auth::Principal principal) {
    auto decision = tls::evaluate_handshake(profile, config_.tls_policy);
    if (!decision.accepted) {
        std::string codes;
        for (auto v : decision.violations) {
            if (!codes.empty()) codes += ", ";
            codes += tls::to_string(v);
        }
        log_event(4, "channel rejected: " + codes);
        throw Error(ErrorCode::PolicyViolation, "handshake rejected: " + codes);
    }
    return Session(profile, std::move(principal));
}

Session Gateway::open_password_session(const tls::HandshakeProfile& profile,
                                       const std::string& user, const std::string& password) {
    try {
        auth::Principal principal = users_->authenticate_password(user, password);
        log_event(6, "password authentication succeeded for " + user);
        return open_session(profile, std::move(principal));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::AuthFailed)
            log_event(4, "password authentication failed");
        throw;
    }
}

std::vector<std::uint8_t> Gateway::ack_frame(const std::string& ref_id) {
    Message ack;
    ack.id = generate_uuid_v4();
    ack.kind = MessageKind::Ack;
    ack.device = "scg";
    ack.ts = now_utc_millis();
    ack.body["ref"] = ref_id;
    return encode_frame(ack);
}

std::vector<std::uint8_t> Gateway::error_frame(const std::string& reason,
                                               const std::string& ref_id) {
    Message err;
    err.id = generate_uuid_v4();
    err.kind = MessageKind::Fault;
    err.device = "scg";
    err.ts = now_utc_millis();
    err.body["error"] = reason;
    if (!ref_id.empty()) err.body["ref"] = ref_id;
    return encode_frame(err);
}

std::vector<std::uint8_t> Gateway::handle_frame(Session& session, const std::uint8_t* data,
                                                std::size_t size) {
    ++session.frames_handled;
    Message msg;
    try {
        msg = decode_frame(data, size).message;
        validate_message(msg, now_utc_millis(), config_.clock_skew_ms);
    } catch (const Error& e) {
        log_event(4, std::string("frame rejected: ") + e.what());
        return error_frame(e.what());
    }
    try {
        store_->enqueue(msg);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DuplicateMessage) {
            // Sender retried after a lost ack; the record is already durable.
            return ack_frame(msg.id);
        }
        log_event(3, std::string("enqueue failed: ") + e.what());
        return error_frame(e.what(), msg.id);
    }
    // Record is flushed to disk at this point; only now may the ack leave.
    return ack_frame(msg.id);
}

std::vector<std::uint8_t> Gateway::handle_frame(Session& session,
                                                const std::vector<std::uint8_t>& frame) {
    return handle_frame(session, frame.data(), frame.size());
}

Message Gateway::transform_for_zone(const Message& msg, ZoneTag zone) const {
    if (zone == ZoneTag::Premises) return msg;
    Message out = msg;
    auto it = config_.zone_policies.find(zone);
    if (it != config_.zone_policies.end()) {
        const privacy::ZonePolicy& policy = it->second;
        if (!policy.field_allowlist.empty())
            out.body = privacy::minimize(out.body, policy.field_allowlist);
        for (const auto& [field, transform] : policy.transforms) {
            auto fit = out.body.find(field);
            if (fit == out.body.end()) continue;
            switch (transform) {
            case privacy::FieldTransform::Pass: break;
            case privacy::FieldTransform::Drop: out.body.erase(fit); break;
            case privacy::FieldTransform::Pseudonymize: {
                std::string raw = std::holds_alternative<std::string>(fit->second)
                                      ? std::get<std::string>(fit->second)
                                      : canonical_encode(msg); // non-strings keyed by whole record
                if (std::holds_alternative<std::string>(fit->second))
                    fit->second = privacy::pseudonymize(raw, pseudonym_key_, field);
                break;
            }
            }
        }
    }
    // Device identifiers never leave the premises in the raw.
    out.device = privacy::pseudonymize(msg.device, pseudonym_key_, "device");
    return out;
}

std::size_t Gateway::forward_pending(BackendChannel& backend) {
    auto decision = tls::evaluate_handshake(backend.handshake_profile(), config_.tls_policy);
    if (!decision.accepted) {
        log_event(3, "backend channel rejected by TLS policy; forwarding suspended");
        return 0;
    }
    if (config_.backend.zone.tag == ZoneTag::ThirdParty) {
        // Third parties get anonymized batch releases only, never the live stream.
        log_event(3, "third-party backend: live forwarding disabled");
        return 0;
    }

    std::size_t forwarded = 0;
    for (;;) {
        auto batch = store_->dequeue_batch(64);
        for (const auto& id : batch.integrity_failures)
            log_event(2, "record failed authentication and was quarantined: " + id);
        if (batch.items.empty()) break;
        bool backend_ok = true;
        for (auto& [id, msg] : batch.items) {
            if (!backend_ok) {
                store_->requeue(id);
                continue;
            }
            Message outbound = transform_for_zone(msg, config_.backend.zone.tag);
            if (backend.deliver(outbound)) {
                store_->ack(id);
                ++forwarded;
            } else {
                store_->requeue(id);
                backend_ok = false;
            }
        }
        if (!backend_ok) break;
        if (batch.items.size() < 64) break;
    }
    return forwarded;
}

bool Gateway::authorize(const auth::Principal& principal, auth::Action action) {
    bool allowed = authorizer_.authorize(principal, action);
    if (!allowed)
        log_event(4, "authorization denied: " + principal.id + " -> " +
                         auth::to_string(action));
    return allowed;
}

namespace {

bool read_exact(int fd, std::uint8_t* buf, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
        ssize_t r = ::read(fd, buf + got, n - got);
        if (r <= 0) return false;
        got += static_cast<std::size_t>(r);
    }
    return true;
}

bool write_all(int fd, const std::uint8_t* buf, std::size_t n) {
    std::size_t sent = 0;
    while (sent < n) {
        ssize_t r = ::write(fd, buf + sent, n - sent);
        if (r <= 0) return false;
        sent += static_cast<std::size_t>(r);
    }
    return true;
}

std::optional<std::vector<std::uint8_t>> read_frame_bytes(int fd) {
    std::uint8_t header[4];
    if (!read_exact(fd, header, 4)) return std::nullopt;
    std::uint32_t len = (static_cast<std::uint32_t>(header[0]) << 24) |
                        (static_cast<std::uint32_t>(header[1]) << 16) |
                        (static_cast<std::uint32_t>(header[2]) << 8) |
                        static_cast<std::uint32_t>(header[3]);
    if (len > kMaxFramePayload) return std::nullopt;
    std::vector<std::uint8_t> frame(4 + len);
    std::copy(header, header + 4, frame.begin());
    if (!read_exact(fd, frame.data() + 4, len)) return std::nullopt;
    return frame;
}

bool write_json_frame(int fd, const json& obj) {
    std::string text = obj.dump();
    std::uint32_t len = static_cast<std::uint32_t>(text.size());
    std::uint8_t header[4] = {static_cast<std::uint8_t>(len >> 24),
                              static_cast<std::uint8_t>(len >> 16),
                              static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len)};
    return write_all(fd, header, 4) &&
           write_all(fd, reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

void handle_connection(Gateway& gw, int fd) {
    auto hello_bytes = read_frame_bytes(fd);
    if (!hello_bytes) {
        ::close(fd);
        return;
    }
    json hello = json::parse(hello_bytes->begin() + 4, hello_bytes->end(), nullptr, false);
    std::optional<Session> session;
    try {
        if (hello.is_discarded() || !hello.is_object())
            throw Error(ErrorCode::ParseError, "bad hello");
        auto profile = tls::profile_from_json(hello.at("profile"));
        const json& a = hello.at("auth");
        std::string mode = a.value("mode", "");
        if (mode == "password") {
            session = gw.open_password_session(profile, a.value("id", ""),
                                               a.value("password", ""));
        } else if (mode == "certificate") {
            std::vector<auth::Certificate> chain;
            for (const auto& c : a.at("chain"))
                chain.push_back(auth::Certificate::from_json(c.dump()));
            std::vector<auth::Certificate> anchors;
            for (const auto& c : a.value("trust_anchors", json::array()))
                anchors.push_back(auth::Certificate::from_json(c.dump()));
            auto principal = auth::authenticate_certificate(chain, anchors);
            gw.log_event(6, "certificate authentication succeeded for " + principal.id);
            session = gw.open_session(profile, std::move(principal));
        } else {
            throw Error(ErrorCode::AuthFailed, "unknown auth mode");
        }
    } catch (const Error& e) {
        json reply = {{"ok", false}, {"error", e.what()}};
        write_json_frame(fd, reply);
        ::close(fd);
        return;
    }
    write_json_frame(fd, json{{"ok", true}});

    while (auto frame = read_frame_bytes(fd)) {
        auto reply = gw.handle_frame(*session, *frame);
        if (!write_all(fd, reply.data(), reply.size())) break;
    }
    ::close(fd);
}

} // namespace

int serve(const GatewayConfig& config, const Bytes& master_secret) {
    Gateway gw(config, master_secret);

    int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) {
        std::cerr << "scg: cannot create socket\n";
        return 1;
    }
    int one = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(config.listen_port));
    if (::inet_pton(AF_INET, config.listen_host.c_str(), &addr.sin_addr) != 1) {
        std::cerr << "scg: bad listen address " << config.listen_host << "\n";
        ::close(listener);
        return 1;
    }
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listener, 16) != 0) {
        std::cerr << "scg: cannot bind " << config.listen_host << ":" << config.listen_port
                  << "\n";
        ::close(listener);
        return 1;
    }
    std::cerr << "scg: listening on " << config.listen_host << ":" << config.listen_port << "\n";

    for (;;) {
        int fd = ::accept(listener, nullptr, nullptr);
        if (fd < 0) break;
        std::thread([&gw, fd] { handle_connection(gw, fd); }).detach();
    }
    ::close(listener);
    return 0;
}

} // namespace scg::gateway
