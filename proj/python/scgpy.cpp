// Python bindings for the gateway core. Structured values cross the boundary
// as JSON text so the Python side needs no mirrored type hierarchy.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "scg/alerting.hpp"
#include "scg/crypto.hpp"
#include "scg/errors.hpp"
#include "scg/message.hpp"
#include "scg/privacy.hpp"
#include "scg/sim.hpp"
#include "scg/tls_json.hpp"
#include "scg/tls_policy.hpp"

namespace py = pybind11;
using namespace scg;
using nlohmann::json;

namespace {

tls::Policy policy_from_text(const std::string& text) {
    if (text.empty()) return tls::default_policy();
    return tls::policy_from_json(json::parse(text), tls::default_policy());
}

json policy_to_json(const tls::Policy& p) {
    return json{{"allowed_suites", p.allowed_suites},
                {"min_version", tls::to_string(p.min_version)},
                {"require_mutual_auth", p.require_mutual_auth},
                {"forbid_compression", p.forbid_compression},
                {"min_dh_bits", p.min_dh_bits},
                {"min_ecdh_bits", p.min_ecdh_bits},
                {"min_symmetric_bits", p.min_symmetric_bits},
                {"min_block_bits", p.min_block_bits},
                {"forbid_static_keys", p.forbid_static_keys},
                {"strict", p.strict}};
}

} // namespace

PYBIND11_MODULE(scgpy, m) {
    m.doc() = "Storage communications gateway core: TLS channel policy, privacy "
              "transforms, alert consolidation, message framing and resilience "
              "simulation.";

    py::register_exception<scg::Error>(m, "ScgError");

    // --- TLS channel policy ---
    m.def("default_policy", [] { return policy_to_json(tls::default_policy()).dump(); },
          "Default channel policy as JSON text.");
    m.def(
        "evaluate_handshake",
        [](const std::string& profile_json, const std::string& policy_json) {
            auto profile = tls::profile_from_json(json::parse(profile_json));
            return tls::to_json(tls::evaluate_handshake(profile, policy_from_text(policy_json)))
                .dump();
        },
        py::arg("profile_json"), py::arg("policy_json") = std::string(),
        "Evaluate one handshake profile; returns the decision as JSON text.");
    m.def(
        "audit_profiles",
        [](const std::string& profiles_json, const std::string& policy_json) {
            auto profiles = tls::profiles_from_json_text(profiles_json);
            return tls::to_json(tls::audit_profiles(profiles, policy_from_text(policy_json)))
                .dump();
        },
        py::arg("profiles_json"), py::arg("policy_json") = std::string(),
        "Audit a batch of handshake profiles; returns the report as JSON text.");
    m.def("suite_registry_snapshot", [] { return tls::suite_registry_snapshot(); },
          "Known cipher-suite names.");

    // --- privacy ---
    m.def("emd_equal_distance", &privacy::emd_equal_distance, py::arg("p"), py::arg("q"),
          "Earth mover's distance under the equal (0/1) ground metric.");
    m.def("emd_ordered", &privacy::emd_ordered, py::arg("p"), py::arg("q"),
          "Earth mover's distance for ordered attributes with unit spacing.");
    m.def(
        "pseudonymize",
        [](const std::string& value, const std::string& key_hex, const std::string& context) {
            return privacy::pseudonymize(value, crypto::from_hex(key_hex), context);
        },
        py::arg("value"), py::arg("key_hex"), py::arg("context"),
        "Deterministic keyed pseudonym (32 lowercase hex chars).");
    m.def("looks_like_pseudonym", &privacy::looks_like_pseudonym, py::arg("text"));

    // --- alerting ---
    m.def(
        "classify_severity",
        [](int severity) {
            auto map = alerting::default_class_map();
            return map.classes.at(alerting::classify(severity, map)).name;
        },
        py::arg("severity"), "Alert class name for a syslog severity (default map).");

    // --- message framing ---
    m.def(
        "encode_frame",
        [](const std::string& message_json) {
            auto frame = encode_frame(canonical_decode(message_json));
            return py::bytes(reinterpret_cast<const char*>(frame.data()), frame.size());
        },
        py::arg("message_json"), "Validate and frame a message given as JSON text.");
    m.def(
        "decode_frame",
        [](const py::bytes& frame) {
            std::string raw = frame;
            auto decoded = decode_frame(reinterpret_cast<const std::uint8_t*>(raw.data()),
                                        raw.size());
            return py::make_tuple(canonical_encode(decoded.message), decoded.consumed);
        },
        py::arg("frame"), "Decode one frame; returns (message_json, bytes_consumed).");
    m.def(
        "canonical_encode",
        [](const std::string& message_json) {
            return canonical_encode(canonical_decode(message_json));
        },
        py::arg("message_json"), "Canonical byte-stable encoding of a message.");

    // --- resilience simulation ---
    m.def(
        "uptime",
        [](const std::vector<std::pair<double, double>>& down, double duration_s) {
            std::vector<sim::DownInterval> ledger;
            for (auto [a, b] : down) ledger.push_back({a, b});
            return sim::uptime(ledger, duration_s);
        },
        py::arg("down_intervals"), py::arg("duration_s"),
        "Uptime fraction given (start, end) outage intervals.");
    m.def(
        "run_scenario",
        [](const std::string& scenario_json) {
            auto scenario = sim::scenario_from_json_text(scenario_json);
            return sim::report_to_json_text(sim::run_scenario(scenario), scenario);
        },
        py::arg("scenario_json"),
        "Run a fault-injection scenario; returns the report as JSON text.");
}
