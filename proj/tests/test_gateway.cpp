#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "scg/errors.hpp"
#include "scg/gateway.hpp"

#include "oracles.hpp"

using namespace scg;
using namespace scg::gateway;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("scg-gw-test-" + generate_uuid_v4());
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

crypto::Bytes master_secret() {
    return crypto::from_hex("00112233445566778899aabbccddeeff");
}

GatewayConfig test_config(const fs::path& dir) {
    GatewayConfig config;
    config.storage_dir = dir;
    config.backend.host = "127.0.0.1";
    config.backend.port = 9;
    config.backend.zone = {ZoneTag::ExternalOperations, "AT"};
    config.eu_region_allowlist = {"AT", "DE", "BE", "ES"};
    config.kdf.memory_cost = 1024; // fast test KDF
    config.kdf.time_cost = 1;

    privacy::ZonePolicy ext;
    ext.zone = ZoneTag::ExternalOperations;
    ext.release_mode = privacy::ReleaseMode::Pseudonymized;
    ext.field_allowlist = {"kWh", "ref", "household"};
    ext.transforms["household"] = privacy::FieldTransform::Pseudonymize;
    config.zone_policies[ZoneTag::ExternalOperations] = ext;
    return config;
}

tls::HandshakeProfile good_profile() {
    tls::HandshakeProfile p;
    p.protocol_version = tls::ProtocolVersion::TLS1_2;
    p.cipher_suite = "TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256";
    p.client_certificate_presented = true;
    p.ecdh_curve_bits = 256;
    return p;
}

auth::Principal device_principal() {
    return auth::Principal{"site-1", auth::AuthMode::Password, {"prosumer"}, now_utc_millis()};
}

Message measurement(const std::string& device = "meter-1") {
    Message msg;
    msg.id = generate_uuid_v4();
    msg.kind = MessageKind::Measurement;
    msg.device = device;
    msg.ts = now_utc_millis();
    msg.body["kWh"] = static_cast<std::int64_t>(42);
    msg.body["ref"] = msg.id;
    msg.body["household"] = std::string("Doe household");
    return msg;
}

// In-memory backend capturing everything it accepts.
class CaptureBackend : public BackendChannel {
public:
    explicit CaptureBackend(tls::HandshakeProfile profile, bool healthy = true)
        : profile_(std::move(profile)), healthy_(healthy) {}

    tls::HandshakeProfile handshake_profile() override { return profile_; }
    bool deliver(const Message& msg) override {
        if (!healthy_) return false;
        captured.push_back(msg);
        return true;
    }

    std::vector<Message> captured;
    void set_healthy(bool h) { healthy_ = h; }

private:
    tls::HandshakeProfile profile_;
    bool healthy_;
};

} // namespace

TEST_CASE("config validation: alert map, backend zone, EU rule, storage dir") {
    TempDir dir;
    auto config = test_config(dir.path);
    CHECK_NOTHROW(validate_config(config));

    auto bad_map = config;
    bad_map.alert_classes.classes.resize(3);
    CHECK_THROWS_AS(validate_config(bad_map), Error);
    try {
        validate_config(bad_map);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
        CHECK(std::string(e.what()).find("CoverageGap") != std::string::npos);
    }

    auto premises_backend = config;
    premises_backend.backend.zone.tag = ZoneTag::Premises;
    CHECK_THROWS_AS(validate_config(premises_backend), Error);

    auto us_backend = config;
    us_backend.backend.zone.region = "US";
    CHECK_THROWS_AS(validate_config(us_backend), Error);

    // non-EU region is fine when the backend does not persist
    auto transit_only = us_backend;
    transit_only.backend.persists_data = false;
    CHECK_NOTHROW(validate_config(transit_only));

    auto no_storage = config;
    no_storage.storage_dir.clear();
    CHECK_THROWS_AS(validate_config(no_storage), Error);
}

TEST_CASE("config parses from JSON with partial overrides") {
    auto config = config_from_json_text(R"({
        "listen": {"host": "127.0.0.1", "port": 7701},
        "backend": {"host": "10.0.0.2", "port": 8443,
                    "zone": {"tag": "external_operations", "region": "DE"},
                    "persists_data": true},
        "storage_dir": "/tmp/scg-data",
        "retention_days": 14,
        "eu_region_allowlist": ["AT", "DE"],
        "tls_policy": {"min_dh_bits": 3072},
        "zone_policies": [{"zone": "external_operations", "allowlist": ["kWh"],
                           "transforms": {"household": "drop"}}],
        "users": [{"id": "alice", "roles": ["site-admin"]}],
        "access_rules": [{"role": "site-admin", "action": "configure", "allow": true}],
        "kdf": {"memory_cost_kib": 1024, "time_cost": 1}
    })");
    CHECK(config.listen_port == 7701);
    CHECK(config.backend.zone.region == "DE");
    CHECK(config.retention_ms == 14ll * 24 * 3600 * 1000);
    CHECK(config.tls_policy.min_dh_bits == 3072);
    CHECK(config.tls_policy.min_ecdh_bits == 192);
    CHECK(config.zone_policies.at(ZoneTag::ExternalOperations).field_allowlist.count("kWh") == 1);
    CHECK(config.users.size() == 1);
    CHECK(config.access_rules.size() == 1);
    CHECK(config.kdf.memory_cost == 1024);
    CHECK_NOTHROW(validate_config(config));

    CHECK_THROWS_AS(config_from_json_text("not json"), Error);
    CHECK_THROWS_AS(config_from_json_text(R"({"backend":{"zone":{"tag":"dmz"}}})"), Error);
}

TEST_CASE("startup: empty store recovers to zero and logs the event") {
    TempDir dir;
    Gateway gw(test_config(dir.path), master_secret());
    CHECK(gw.recovery_report().restored == 0);
    CHECK(gw.recovery_report().pending == 0);
    CHECK(gw.store().verify_log().ok);
    auto dash = gw.alerts().dashboard();
    REQUIRE_FALSE(dash.empty());
    CHECK(dash.back().severity == 5);
    CHECK(dash.back().event.find("gateway started") != std::string::npos);
}

TEST_CASE("sessions exist only behind the policy gate") {
    TempDir dir;
    Gateway gw(test_config(dir.path), master_secret());

    auto session = gw.open_session(good_profile(), device_principal());
    CHECK(session.profile().cipher_suite == "TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256");
    CHECK(session.principal().id == "site-1");

    auto bad = good_profile();
    bad.compression_enabled = true;
    CHECK_THROWS_AS(gw.open_session(bad, device_principal()), Error);
    // the rejection left a severity-4 event
    auto dash = gw.alerts().dashboard();
    CHECK(dash.back().severity == 4);
    CHECK(dash.back().event.find("V04_CompressionEnabled") != std::string::npos);
}

TEST_CASE("password sessions authenticate against the registry") {
    TempDir dir;
    Gateway gw(test_config(dir.path), master_secret());
    crypto::KdfParams kdf;
    kdf.salt = crypto::random_bytes(16);
    kdf.memory_cost = 1024;
    kdf.time_cost = 1;
    gw.users().register_user("site-1", "a long password", {"prosumer"}, kdf);

    auto session = gw.open_password_session(good_profile(), "site-1", "a long password");
    CHECK(session.principal().roles == std::set<std::string>{"prosumer"});

    CHECK_THROWS_AS(gw.open_password_session(good_profile(), "site-1", "wrong password!"), Error);
    CHECK_THROWS_AS(gw.open_password_session(good_profile(), "ghost", "a long password"), Error);
}

TEST_CASE("handle_frame: ack after durability, duplicates re-acked, faults reported") {
    TempDir dir;
    Gateway gw(test_config(dir.path), master_secret());
    auto session = gw.open_session(good_profile(), device_principal());

    Message msg = measurement();
    auto frame = encode_frame(msg);
    auto reply = decode_frame(gw.handle_frame(session, frame)).message;
    CHECK(reply.kind == MessageKind::Ack);
    CHECK(std::get<std::string>(reply.body.at("ref")) == msg.id);
    CHECK(gw.store().pending_count() == 1);

    // same frame again: re-acked, still exactly one record
    auto reply2 = decode_frame(gw.handle_frame(session, frame)).message;
    CHECK(reply2.kind == MessageKind::Ack);
    CHECK(std::get<std::string>(reply2.body.at("ref")) == msg.id);
    CHECK(gw.store().pending_count() == 1);

    // malformed frame: fault frame, session survives
    std::vector<std::uint8_t> junk{0, 0, 0, 2, '{', 'x'};
    auto fault = decode_frame(gw.handle_frame(session, junk)).message;
    CHECK(fault.kind == MessageKind::Fault);
    CHECK(std::get<std::string>(fault.body.at("error")).size() > 0);

    // stale timestamp beyond the skew window
    Message stale = measurement();
    stale.ts = now_utc_millis() + kDefaultClockSkewMs + 60'000;
    auto stale_reply = decode_frame(gw.handle_frame(session, encode_frame(stale))).message;
    CHECK(stale_reply.kind == MessageKind::Fault);

    // session continued to work throughout
    Message after = measurement();
    auto ok = decode_frame(gw.handle_frame(session, encode_frame(after))).message;
    CHECK(ok.kind == MessageKind::Ack);
    CHECK(session.frames_handled == 5);
}

TEST_CASE("zone transform pseudonymizes the device and applies field rules") {
    TempDir dir;
    Gateway gw(test_config(dir.path), master_secret());
    Message msg = measurement("meter-17");

    Message premises = gw.transform_for_zone(msg, ZoneTag::Premises);
    CHECK(premises == msg); // raw release inside the premises

    Message ext = gw.transform_for_zone(msg, ZoneTag::ExternalOperations);
    CHECK(privacy::looks_like_pseudonym(ext.device));
    CHECK(ext.device != msg.device);
    CHECK(std::get<std::int64_t>(ext.body.at("kWh")) == 42);
    CHECK(privacy::looks_like_pseudonym(std::get<std::string>(ext.body.at("household"))));
    // deterministic mapping: same device, same pseudonym
    CHECK(gw.transform_for_zone(msg, ZoneTag::ExternalOperations).device == ext.device);
}

TEST_CASE("forward_pending: healthy backend drains and acks") {
    TempDir dir;
    Gateway gw(test_config(dir.path), master_secret());
    auto session = gw.open_session(good_profile(), device_principal());
    std::vector<std::string> ids;
    for (int i = 0; i < 5; ++i) {
        Message m = measurement();
        ids.push_back(m.id);
        gw.handle_frame(session, encode_frame(m));
    }
    CaptureBackend backend(good_profile());
    CHECK(gw.forward_pending(backend) == 5);
    CHECK(backend.captured.size() == 5);
    CHECK(gw.store().pending_count() == 0);
    CHECK(gw.store().counts().acked == 5);
    // everything that left is pseudonymized
    for (const auto& m : backend.captured) CHECK(privacy::looks_like_pseudonym(m.device));
}

TEST_CASE("forward_pending: rejected channel and third-party targets forward nothing") {
    TempDir dir;
    Gateway gw(test_config(dir.path), master_secret());
    auto session = gw.open_session(good_profile(), device_principal());
    gw.handle_frame(session, encode_frame(measurement()));

    auto weak = good_profile();
    weak.ecdh_curve_bits = 160;
    CaptureBackend rejected(weak);
    CHECK(gw.forward_pending(rejected) == 0);
    CHECK(rejected.captured.empty());
    CHECK(gw.store().pending_count() == 1);
    CHECK(gw.alerts().dashboard().back().severity == 3);

    // third-party zone refuses the live stream even over a good channel
    auto config = test_config(dir.path);
    config.backend.zone.tag = ZoneTag::ThirdParty;
    TempDir dir2;
    config.storage_dir = dir2.path;
    Gateway third(config, master_secret());
    auto s2 = third.open_session(good_profile(), device_principal());
    third.handle_frame(s2, encode_frame(measurement()));
    CaptureBackend good(good_profile());
    CHECK(third.forward_pending(good) == 0);
    CHECK(third.store().pending_count() == 1);
}

TEST_CASE("forward_pending: backend failure requeues instead of losing") {
    TempDir dir;
    Gateway gw(test_config(dir.path), master_secret());
    auto session = gw.open_session(good_profile(), device_principal());
    for (int i = 0; i < 3; ++i) gw.handle_frame(session, encode_frame(measurement()));

    CaptureBackend down(good_profile(), false);
    CHECK(gw.forward_pending(down) == 0);
    CHECK(gw.store().pending_count() == 3);

    CaptureBackend up(good_profile());
    CHECK(gw.forward_pending(up) == 3);
    CHECK(gw.store().counts().acked == 3);
}

TEST_CASE("records survive a crash between enqueue and forward") {
    TempDir dir;
    std::vector<std::string> ids;
    {
        Gateway gw(test_config(dir.path), master_secret());
        auto session = gw.open_session(good_profile(), device_principal());
        for (int i = 0; i < 4; ++i) {
            Message m = measurement();
            ids.push_back(m.id);
            auto reply = decode_frame(gw.handle_frame(session, encode_frame(m))).message;
            REQUIRE(reply.kind == MessageKind::Ack);
        }
        // two dequeued but neither delivered nor acked at "crash" time
        gw.store().dequeue_batch(2);
    } // destructor = orderly loss of the process for the in-memory state
    Gateway revived(test_config(dir.path), master_secret());
    CHECK(revived.recovery_report().restored == 2);
    CHECK(revived.recovery_report().pending == 4);
    CaptureBackend backend(good_profile());
    CHECK(revived.forward_pending(backend) == 4);
    std::set<std::string> delivered;
    for (const auto& m : backend.captured)
        delivered.insert(std::get<std::string>(m.body.at("ref")));
    CHECK(delivered == std::set<std::string>(ids.begin(), ids.end()));
}

TEST_CASE("authorization denials are logged at severity 4") {
    TempDir dir;
    auto config = test_config(dir.path);
    config.access_rules = {{"prosumer", auth::Action::ViewStatus, true}};
    Gateway gw(config, master_secret());
    auto principal = device_principal();
    CHECK(gw.authorize(principal, auth::Action::ViewStatus));
    CHECK_FALSE(gw.authorize(principal, auth::Action::SendControl));
    auto dash = gw.alerts().dashboard();
    CHECK(dash.back().severity == 4);
    CHECK(dash.back().event.find("send_control") != std::string::npos);
}

TEST_CASE("master secret comes from the environment as hex") {
    ::setenv("SCG_MASTER_SECRET", "00112233445566778899aabbccddeeff", 1);
    CHECK(master_secret_from_env() == master_secret());
    ::setenv("SCG_MASTER_SECRET", "not-hex", 1);
    CHECK_THROWS_AS(master_secret_from_env(), Error);
    ::unsetenv("SCG_MASTER_SECRET");
    CHECK_THROWS_AS(master_secret_from_env(), Error);
}

TEST_CASE("security log chain stays valid across gateway generations") {
    TempDir dir;
    for (int generation = 0; generation < 3; ++generation) {
        Gateway gw(test_config(dir.path), master_secret());
        auto session = gw.open_session(good_profile(), device_principal());
        gw.handle_frame(session, encode_frame(measurement()));
        CHECK(gw.store().verify_log().ok);
    }
}
