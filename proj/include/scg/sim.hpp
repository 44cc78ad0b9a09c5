#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace scg::sim {

enum class FaultKind { GatewayCrash, LinkDrop, BackendDown };

const char* to_string(FaultKind k);
std::optional<FaultKind> parse_fault_kind(const std::string& text);

struct Fault {
    double at_s = 0;
    FaultKind kind = FaultKind::GatewayCrash;
    double duration_s = 0;
};

struct Scenario {
    std::uint64_t seed = 1;
    int devices = 4;
    double rate_per_device_hz = 1.0; // messages per simulated second per device
    double duration_s = 60.0;
    std::vector<Fault> faults;
    double uptime_target = 0.999;
};

Scenario scenario_from_json_text(const std::string& text);
Scenario scenario_from_file(const std::filesystem::path& path);

struct FaultRecovery {
    FaultKind kind = FaultKind::GatewayCrash;
    double at_s = 0;
    double recovery_s = 0;
};

struct ScenarioReport {
    std::uint64_t sent = 0;
    std::uint64_t delivered_unique = 0;
    std::uint64_t duplicates_suppressed = 0;
    std::uint64_t lost = 0;
    double uptime_fraction = 1.0;
    std::vector<FaultRecovery> recoveries;

    bool passes(double uptime_target) const {
        return lost == 0 && uptime_fraction >= uptime_target;
    }
};

std::string report_to_json_text(const ScenarioReport& report, const Scenario& scenario);

struct DownInterval {
    double start_s = 0;
    double end_s = 0;
};

// Fraction of `duration_s` not covered by the down intervals. Intervals must
// be non-overlapping and inside [0, duration].
double uptime(const std::vector<DownInterval>& ledger, double duration_s);

// Deterministic event-driven run of a simulated site against a real gateway
// instance (real storage files, simulated clock). `data_dir` holds the
// gateway state across simulated crashes; a fresh directory per run.
ScenarioReport run_scenario(const Scenario& scenario, const std::filesystem::path& data_dir);

// Convenience: run in a throwaway directory under the system temp path.
ScenarioReport run_scenario(const Scenario& scenario);

} // namespace scg::sim
