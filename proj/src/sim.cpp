#include "scg/sim.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <set>

#include <json.hpp>

#include "scg/errors.hpp"
#include "scg/gateway.hpp"

namespace scg::sim {

using nlohmann::json;

const char* to_string(FaultKind k) {
    switch (k) {
    case FaultKind::GatewayCrash: return "gateway_crash";
    case FaultKind::LinkDrop: return "link_drop";
    case FaultKind::BackendDown: return "backend_down";
    }
    return "?";
}

std::optional<FaultKind> parse_fault_kind(const std::string& text) {
    if (text == "gateway_crash") return FaultKind::GatewayCrash;
    if (text == "link_drop") return FaultKind::LinkDrop;
    if (text == "backend_down") return FaultKind::BackendDown;
    return std::nullopt;
}

Scenario scenario_from_json_text(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw Error(ErrorCode::ConfigError, "scenario is not a JSON object");
    Scenario s;
    s.seed = doc.value("seed", s.seed);
    s.devices = doc.value("devices", s.devices);
    s.rate_per_device_hz = doc.value("rate_per_device_hz", s.rate_per_device_hz);
    s.duration_s = doc.value("duration_s", s.duration_s);
    s.uptime_target = doc.value("uptime_target", s.uptime_target);
    for (const auto& f : doc.value("faults", json::array())) {
        Fault fault;
        fault.at_s = f.value("at_s", 0.0);
        auto kind = parse_fault_kind(f.value("kind", ""));
        if (!kind) throw Error(ErrorCode::ConfigError, "unknown fault kind");
        fault.kind = *kind;
        fault.duration_s = f.value("duration_s", 0.0);
        if (fault.at_s < 0 || fault.at_s + fault.duration_s > s.duration_s)
            throw Error(ErrorCode::ConfigError, "fault window outside scenario duration");
        s.faults.push_back(fault);
    }
    return s;
}

Scenario scenario_from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read scenario: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return scenario_from_json_text(text);
}

std::string report_to_json_text(const ScenarioReport& report, const Scenario& scenario) {
    json obj = json::object();
    obj["sent"] = report.sent;
    obj["delivered_unique"] = report.delivered_unique;
    obj["duplicates_suppressed"] = report.duplicates_suppressed;
    obj["lost"] = report.lost;
    obj["uptime_fraction"] = report.uptime_fraction;
    obj["uptime_target"] = scenario.uptime_target;
    obj["pass"] = report.passes(scenario.uptime_target);
    json recoveries = json::array();
    for (const auto& r : report.recoveries)
        recoveries.push_back(
            {{"kind", to_string(r.kind)}, {"at_s", r.at_s}, {"recovery_s", r.recovery_s}});
    obj["recoveries"] = recoveries;
    return obj.dump(2);
}

double uptime(const std::vector<DownInterval>& ledger, double duration_s) {
    if (duration_s <= 0) throw Error(ErrorCode::ValidationError, "duration must be positive");
    std::vector<DownInterval> sorted = ledger;
    std::sort(sorted.begin(), sorted.end(),
              [](const DownInterval& a, const DownInterval& b) { return a.start_s < b.start_s; });
    double down = 0;
    double prev_end = -1;
    for (const auto& iv : sorted) {
        if (iv.start_s < 0 || iv.end_s > duration_s || iv.end_s < iv.start_s)
            throw Error(ErrorCode::ValidationError, "interval outside duration");
        if (iv.start_s < prev_end)
            throw Error(ErrorCode::ValidationError, "overlapping downtime intervals");
        down += iv.end_s - iv.start_s;
        prev_end = iv.end_s;
    }
    return (duration_s - down) / duration_s;
}

namespace {

constexpr std::int64_t kRetryMs = 2000;
constexpr std::int64_t kAckLatencyMs = 50;
constexpr std::int64_t kDeliverLatencyMs = 20;
constexpr std::int64_t kForwardTickMs = 1000;

struct SimEventCmp;

enum class EventKind {
    DeviceSend,
    AckArrive,
    ForwardTick,
    BackendDeliver,
    GatewayDown,
    GatewayUp,
};

struct SimEvent {
    std::int64_t at_ms = 0;
    std::uint64_t order = 0; // FIFO tie-break for determinism
    EventKind kind = EventKind::DeviceSend;
    std::string message_id;
    std::vector<std::pair<std::string, Message>> batch;
};

struct SimEventCompare {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        if (a.at_ms != b.at_ms) return a.at_ms > b.at_ms;
        return a.order > b.order;
    }
};

struct Sink {
    std::set<std::string> unique_ids;
    std::uint64_t total_received = 0;

    void receive(const Message& msg) {
        ++total_received;
        // Deduplicating by message id yields exactly-once observation.
        if (msg.body.count("ref"))
            unique_ids.insert(std::get<std::string>(msg.body.at("ref")));
    }
};

gateway::GatewayConfig sim_config(const std::filesystem::path& data_dir) {
    gateway::GatewayConfig config;
    config.storage_dir = data_dir;
    config.backend.zone = Zone{ZoneTag::ExternalOperations, "AT"};
    config.backend.persists_data = true;
    config.eu_region_allowlist = {"AT", "BE", "DE", "ES", "SI"};
    privacy::ZonePolicy zp;
    zp.zone = ZoneTag::ExternalOperations;
    zp.release_mode = privacy::ReleaseMode::Pseudonymized;
    zp.field_allowlist = {"kWh", "ref"};
    config.zone_policies[ZoneTag::ExternalOperations] = zp;
    // Desk-scale KDF cost; the production default is far heavier.
    config.kdf.memory_cost = 1024;
    config.kdf.time_cost = 1;
    return config;
}

} // namespace

ScenarioReport run_scenario(const Scenario& scenario, const std::filesystem::path& data_dir) {
    std::filesystem::create_directories(data_dir);
    std::mt19937_64 rng(scenario.seed);
    const std::int64_t duration_ms = static_cast<std::int64_t>(scenario.duration_s * 1000);

    // Original-record bodies carry their own id under "ref" so the sink can
    // dedup after the device field has been pseudonymized.
    gateway::GatewayConfig config = sim_config(data_dir);
    crypto::Bytes master_secret = crypto::from_hex("00112233445566778899aabbccddeeff");
    auto gw = std::make_unique<gateway::Gateway>(config, master_secret);

    tls::HandshakeProfile channel_profile;
    channel_profile.cipher_suite = "TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256";
    channel_profile.ecdh_curve_bits = 256;
    auto session = gw->open_session(
        channel_profile, auth::Principal{"sim-devices", auth::AuthMode::Certificate,
                                         {"device"}, now_utc_millis()});

    Sink sink;
    ScenarioReport report;

    std::priority_queue<SimEvent, std::vector<SimEvent>, SimEventCompare> events;
    std::uint64_t order = 0;
    auto push = [&](std::int64_t at, EventKind kind, std::string id = "",
                    std::vector<std::pair<std::string, Message>> batch = {}) {
        events.push(SimEvent{at, order++, kind, std::move(id), std::move(batch)});
    };

    // Pending sender state: message value + whether the sink acked it.
    std::map<std::string, Message> outstanding;
    std::set<std::string> sender_acked;
    std::uint64_t crash_epoch = 0; // bumps on every gateway crash

    bool gateway_up = true;
    bool link_up = true;
    bool backend_up = true;
    std::vector<DownInterval> down_ledger;

    for (const auto& fault : scenario.faults) {
        std::int64_t at = static_cast<std::int64_t>(fault.at_s * 1000);
        std::int64_t end = at + static_cast<std::int64_t>(fault.duration_s * 1000);
        push(at, EventKind::GatewayDown, to_string(fault.kind));
        push(end, EventKind::GatewayUp, to_string(fault.kind));
        report.recoveries.push_back({fault.kind, fault.at_s, fault.duration_s});
        if (fault.kind == FaultKind::GatewayCrash)
            down_ledger.push_back({fault.at_s, fault.at_s + fault.duration_s});
    }

    // Device message schedule.
    std::int64_t interval_ms =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(1000.0 / scenario.rate_per_device_hz));
    for (int d = 0; d < scenario.devices; ++d) {
        std::int64_t jitter = static_cast<std::int64_t>(rng() % (interval_ms + 1));
        for (std::int64_t t = jitter; t < duration_ms; t += interval_ms) {
            Message msg;
            msg.id = generate_uuid_v4();
            msg.kind = MessageKind::Measurement;
            msg.device = "meter-" + std::to_string(d);
            msg.ts = now_utc_millis();
            msg.body["kWh"] = static_cast<std::int64_t>(rng() % 100);
            msg.body["ref"] = msg.id;
            outstanding.emplace(msg.id, msg);
            push(t, EventKind::DeviceSend, msg.id);
            ++report.sent;
        }
    }
    push(0, EventKind::ForwardTick);

    auto crash_gateway = [&] {
        gw.reset(); // files stay; state is whatever was flushed
        ++crash_epoch;
        gateway_up = false;
    };
    auto restart_gateway = [&] {
        gw = std::make_unique<gateway::Gateway>(config, master_secret);
        gateway_up = true;
    };

    std::map<std::string, std::uint64_t> ack_epoch; // crash epoch when the ack left

    while (!events.empty()) {
        SimEvent ev = events.top();
        events.pop();
        switch (ev.kind) {
        case EventKind::GatewayDown:
            if (ev.message_id == "gateway_crash") {
                if (gateway_up) crash_gateway();
            } else if (ev.message_id == "link_drop") {
                link_up = false;
            } else {
                backend_up = false;
            }
            break;
        case EventKind::GatewayUp:
            if (ev.message_id == "gateway_crash") {
                if (!gateway_up) restart_gateway();
            } else if (ev.message_id == "link_drop") {
                link_up = true;
            } else {
                backend_up = true;
            }
            break;
        case EventKind::DeviceSend: {
            if (sender_acked.count(ev.message_id)) break;
            if (!gateway_up || !link_up) {
                push(ev.at_ms + kRetryMs, EventKind::DeviceSend, ev.message_id);
                break;
            }
            const Message& msg = outstanding.at(ev.message_id);
            auto reply = gw->handle_frame(session, encode_frame(msg));
            Message decoded = decode_frame(reply).message;
            if (decoded.kind == MessageKind::Ack) {
                // The ack is in flight; it only reaches the sender if the
                // gateway does not crash in the meantime (kill-point model).
                ack_epoch[ev.message_id] = crash_epoch;
                push(ev.at_ms + kAckLatencyMs, EventKind::AckArrive, ev.message_id);
            } else {
                push(ev.at_ms + kRetryMs, EventKind::DeviceSend, ev.message_id);
            }
            break;
        }
        case EventKind::AckArrive: {
            if (ack_epoch[ev.message_id] == crash_epoch) {
                sender_acked.insert(ev.message_id);
            } else {
                push(ev.at_ms + kRetryMs, EventKind::DeviceSend, ev.message_id);
            }
            break;
        }
        case EventKind::ForwardTick: {
            if (gateway_up) {
                auto batch = gw->store().dequeue_batch(16);
                if (!batch.items.empty())
                    push(ev.at_ms + kDeliverLatencyMs, EventKind::BackendDeliver,
                         std::to_string(crash_epoch), std::move(batch.items));
            }
            if (ev.at_ms < duration_ms) push(ev.at_ms + kForwardTickMs, EventKind::ForwardTick);
            break;
        }
        case EventKind::BackendDeliver: {
            // A crash while the batch was in flight leaves the records
            // in_flight on disk; recovery resets them to pending.
            if (!gateway_up || std::to_string(crash_epoch) != ev.message_id) break;
            for (auto& [id, msg] : ev.batch) {
                if (backend_up) {
                    sink.receive(gw->transform_for_zone(msg, ZoneTag::ExternalOperations));
                    gw->store().ack(id);
                } else {
                    gw->store().requeue(id);
                }
            }
            break;
        }
        }
    }

    // Drain: everything comes back up and senders retry until the backlog
    // clears (an eventual-delivery pass, not counted as simulated downtime).
    if (!gateway_up) restart_gateway();
    link_up = backend_up = true;
    for (int round = 0; round < 2000 && sink.unique_ids.size() < outstanding.size(); ++round) {
        for (const auto& [id, msg] : outstanding) {
            if (sender_acked.count(id)) continue;
            auto reply = gw->handle_frame(session, encode_frame(msg));
            if (decode_frame(reply).message.kind == MessageKind::Ack) sender_acked.insert(id);
        }
        auto batch = gw->store().dequeue_batch(64);
        if (batch.items.empty()) break;
        for (auto& [id, msg] : batch.items) {
            sink.receive(gw->transform_for_zone(msg, ZoneTag::ExternalOperations));
            gw->store().ack(id);
        }
    }

    report.delivered_unique = sink.unique_ids.size();
    report.duplicates_suppressed = sink.total_received - sink.unique_ids.size();
    std::uint64_t lost = 0;
    for (const auto& [id, msg] : outstanding)
        if (!sink.unique_ids.count(id)) ++lost;
    report.lost = lost;
    report.uptime_fraction = uptime(down_ledger, scenario.duration_s);
    return report;
}

ScenarioReport run_scenario(const Scenario& scenario) {
    auto dir = std::filesystem::temp_directory_path() /
               ("scg-sim-" + std::to_string(scenario.seed) + "-" + generate_uuid_v4());
    auto report = run_scenario(scenario, dir);
    std::filesystem::remove_all(dir);
    return report;
}

} // namespace scg::sim
