#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "scg/errors.hpp"
#include "scg/gateway.hpp"
#include "scg/privacy.hpp"
#include "scg/secure_store.hpp"
#include "scg/sim.hpp"
#include "scg/tls_json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw scg::Error(scg::ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (c == sep) {
            out.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    out.push_back(current);
    return out;
}

int cmd_audit_tls(const std::string& profiles_path, const std::string& policy_path,
                  const std::string& format) {
    auto profiles = scg::tls::profiles_from_json_text(slurp(profiles_path));
    scg::tls::Policy policy = scg::tls::default_policy();
    if (!policy_path.empty()) {
        json doc = json::parse(slurp(policy_path));
        policy = scg::tls::policy_from_json(doc, policy);
    }
    auto report = scg::tls::audit_profiles(profiles, policy);
    if (format == "json") {
        std::cout << scg::tls::to_json(report).dump(2) << "\n";
    } else {
        std::printf("%-8s %-48s %-9s %s\n", "version", "cipher suite", "verdict", "violations");
        for (const auto& entry : report.entries) {
            std::string violations;
            for (auto v : entry.decision.violations) {
                if (!violations.empty()) violations += ",";
                violations += scg::tls::to_string(v);
            }
            std::printf("%-8s %-48s %-9s %s\n", scg::tls::to_string(entry.profile.protocol_version),
                        entry.profile.cipher_suite.c_str(),
                        entry.decision.accepted ? "accept" : "reject", violations.c_str());
        }
        std::printf("evaluated %d, accepted %d, rejected %d\n", report.evaluated, report.accepted,
                    report.rejected);
    }
    return report.all_accepted() ? 0 : 1;
}

int cmd_verify_log(const std::string& data_dir, unsigned memory_kib, unsigned time_cost) {
    auto master = scg::gateway::master_secret_from_env();
    scg::crypto::KdfParams params;
    params.memory_cost = memory_kib;
    params.time_cost = time_cost;
    std::ifstream salt_in(fs::path(data_dir) / "kdf_salt");
    std::string salt_hex;
    if (!salt_in || !std::getline(salt_in, salt_hex))
        throw scg::Error(scg::ErrorCode::IoError, "no kdf_salt in data dir");
    params.salt = scg::crypto::from_hex(salt_hex);
    auto key = scg::crypto::derive_key(master, params);
    auto result = scg::store::SecureStore::verify_log_file(data_dir, key);
    if (result.ok) {
        std::cout << "security log chain verified\n";
        return 0;
    }
    std::cout << "security log verification FAILED at seq " << *result.first_bad_seq << "\n";
    return 1;
}

int cmd_anonymize(const std::string& input, const std::string& qi_arg,
                  const std::string& sensitive, const std::string& kind, double t,
                  int k, const std::string& hierarchy_path, const std::string& output) {
    scg::privacy::AnonTable table;
    {
        std::ifstream in(input);
        if (!in) throw scg::Error(scg::ErrorCode::IoError, "cannot read " + input);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto cells = split(line, ',');
            if (first) {
                table.columns = cells;
                first = false;
            } else {
                table.rows.push_back(cells);
            }
        }
    }
    table.quasi_identifiers = split(qi_arg, ',');
    table.sensitive = sensitive;
    table.sensitive_kind = (kind == "numeric") ? scg::privacy::SensitiveKind::OrderedNumeric
                                               : scg::privacy::SensitiveKind::Categorical;

    scg::privacy::PrivacyParams params;
    params.t = t;
    if (k > 0) params.k = k;
    if (!hierarchy_path.empty()) {
        // One ladder row per raw value: qi_column,raw,level1,level2,...
        std::ifstream in(hierarchy_path);
        if (!in) throw scg::Error(scg::ErrorCode::IoError, "cannot read " + hierarchy_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto cells = split(line, ',');
            if (cells.size() < 3) continue;
            auto& hierarchy = params.hierarchies[cells[0]];
            std::vector<std::string> ladder(cells.begin() + 2, cells.end());
            hierarchy.levels = std::max<int>(hierarchy.levels, static_cast<int>(ladder.size()));
            hierarchy.ladders[cells[1]] = std::move(ladder);
        }
    }

    try {
        auto result = scg::privacy::anonymize(table, params);
        std::ostream* out = &std::cout;
        std::ofstream file;
        if (!output.empty()) {
            file.open(output, std::ios::trunc);
            out = &file;
        }
        for (std::size_t i = 0; i < result.table.columns.size(); ++i)
            *out << (i ? "," : "") << result.table.columns[i];
        *out << "\n";
        for (const auto& row : result.table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) *out << (i ? "," : "") << row[i];
            *out << "\n";
        }
        std::cerr << "satisfied; suppressed " << result.suppressed << " rows; levels:";
        for (const auto& [qi, level] : result.levels) std::cerr << " " << qi << "=" << level;
        std::cerr << "\n";
        return 0;
    } catch (const scg::Error& e) {
        if (e.code() == scg::ErrorCode::Infeasible) {
            std::cerr << e.what() << "\n";
            return 2;
        }
        throw;
    }
}

int cmd_status(const std::string& data_dir, const std::string& format) {
    // Structural counts only; no key material needed.
    std::map<std::string, std::string> status_by_id;
    std::vector<std::string> ids;
    {
        std::ifstream in(fs::path(data_dir) / "records.log");
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (first) {
                first = false;
                continue;
            }
            json obj = json::parse(line, nullptr, false);
            if (obj.is_discarded()) continue;
            std::string id = obj.value("id", "");
            if (!id.empty()) {
                ids.push_back(id);
                status_by_id[id] = "pending";
            }
        }
    }
    {
        std::ifstream in(fs::path(data_dir) / "status.log");
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (first) {
                first = false;
                continue;
            }
            json obj = json::parse(line, nullptr, false);
            if (obj.is_discarded()) continue;
            auto it = status_by_id.find(obj.value("id", ""));
            if (it != status_by_id.end()) it->second = obj.value("status", "pending");
        }
    }
    std::map<std::string, int> counts{{"pending", 0}, {"in_flight", 0}, {"acked", 0},
                                      {"quarantined", 0}};
    for (const auto& [id, status] : status_by_id) counts[status]++;

    std::vector<json> alerts;
    {
        std::ifstream in(fs::path(data_dir) / "outbox.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            json obj = json::parse(line, nullptr, false);
            if (!obj.is_discarded()) alerts.push_back(obj);
        }
        if (alerts.size() > 10) alerts.erase(alerts.begin(), alerts.end() - 10);
    }

    if (format == "json") {
        json obj = json::object();
        obj["queue"] = counts;
        obj["recent_alerts"] = alerts;
        std::cout << obj.dump(2) << "\n";
    } else {
        std::cout << "queue: pending=" << counts["pending"] << " in_flight=" << counts["in_flight"]
                  << " acked=" << counts["acked"] << " quarantined=" << counts["quarantined"]
                  << "\n";
        std::cout << "recent alerts:\n";
        for (const auto& a : alerts)
            std::cout << "  [" << a.value("class", "?") << "] " << a.value("event", "") << "\n";
    }
    return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& format,
                 const std::string& data_dir) {
    auto scenario = scg::sim::scenario_from_file(scenario_path);
    scg::sim::ScenarioReport report;
    if (data_dir.empty())
        report = scg::sim::run_scenario(scenario);
    else
        report = scg::sim::run_scenario(scenario, data_dir);
    if (format == "json") {
        std::cout << scg::sim::report_to_json_text(report, scenario) << "\n";
    } else {
        std::cout << "sent " << report.sent << ", delivered " << report.delivered_unique
                  << ", duplicates suppressed " << report.duplicates_suppressed << ", lost "
                  << report.lost << "\n";
        std::cout << "uptime " << report.uptime_fraction << " (target " << scenario.uptime_target
                  << ")\n";
    }
    return report.passes(scenario.uptime_target) ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"smart-grid storage communications gateway"};
    app.require_subcommand(1);

    auto* serve = app.add_subcommand("serve", "run the gateway service");
    std::string config_path;
    serve->add_option("--config", config_path, "gateway config file (JSON)")->required();

    auto* audit = app.add_subcommand("audit-tls", "evaluate handshake profiles against policy");
    std::string profiles_path, policy_path, audit_format = "table";
    audit->add_option("--profiles", profiles_path, "JSON list of handshake profiles")->required();
    audit->add_option("--policy", policy_path, "policy overrides (JSON)");
    audit->add_option("--format", audit_format, "table|json");

    auto* verify = app.add_subcommand("verify-log", "verify the security log hash chain");
    std::string verify_dir;
    unsigned kdf_mem = 64 * 1024, kdf_time = 3;
    verify->add_option("--data-dir", verify_dir, "gateway data directory")->required();
    verify->add_option("--kdf-memory-kib", kdf_mem, "KDF memory cost (KiB)");
    verify->add_option("--kdf-time", kdf_time, "KDF time cost (iterations)");

    auto* anon = app.add_subcommand("anonymize", "t-closeness anonymization of a CSV table");
    std::string anon_input, anon_qi, anon_sensitive, anon_kind = "categorical";
    std::string anon_hierarchy, anon_output;
    double anon_t = 0.2;
    int anon_k = 0;
    anon->add_option("--input", anon_input, "input CSV (header row)")->required();
    anon->add_option("--qi", anon_qi, "comma-separated quasi-identifier columns")->required();
    anon->add_option("--sensitive", anon_sensitive, "sensitive column")->required();
    anon->add_option("--kind", anon_kind, "categorical|numeric");
    anon->add_option("--t", anon_t, "t-closeness threshold")->required();
    anon->add_option("--k", anon_k, "optional k-anonymity floor");
    anon->add_option("--hierarchy", anon_hierarchy, "generalization ladder file");
    anon->add_option("--output", anon_output, "output CSV (default stdout)");

    auto* status = app.add_subcommand("status", "queue depths and recent alerts");
    std::string status_dir, status_format = "table";
    status->add_option("--data-dir", status_dir, "gateway data directory")->required();
    status->add_option("--format", status_format, "table|json");

    auto* simulate = app.add_subcommand("simulate", "run a fault-injection scenario");
    std::string sim_scenario, sim_format = "table", sim_dir;
    simulate->add_option("--scenario", sim_scenario, "scenario file (JSON)")->required();
    simulate->add_option("--format", sim_format, "table|json");
    simulate->add_option("--data-dir", sim_dir, "persistent data directory for the run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 64;
    }

    try {
        if (serve->parsed()) {
            auto config = scg::gateway::config_from_file(config_path);
            scg::gateway::validate_config(config);
            return scg::gateway::serve(config, scg::gateway::master_secret_from_env());
        }
        if (audit->parsed()) return cmd_audit_tls(profiles_path, policy_path, audit_format);
        if (verify->parsed()) return cmd_verify_log(verify_dir, kdf_mem, kdf_time);
        if (anon->parsed())
            return cmd_anonymize(anon_input, anon_qi, anon_sensitive, anon_kind, anon_t, anon_k,
                                 anon_hierarchy, anon_output);
        if (status->parsed()) return cmd_status(status_dir, status_format);
        if (simulate->parsed()) return cmd_simulate(sim_scenario, sim_format, sim_dir);
    } catch (const scg::Error& e) {
        std::cerr << "scg: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "scg: " << e.what() << "\n";
        return 1;
    }
    return 64;
}
