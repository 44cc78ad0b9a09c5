#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "scg/secure_store.hpp"

namespace scg::alerting {

struct AlertClass {
    std::string name;
    int severity_low = 0;  // inclusive
    int severity_high = 0; // inclusive, covers 1 or 2 contiguous severities
};

struct AlertClassMap {
    std::vector<AlertClass> classes; // ordered most to least severe
};

// Default consolidation: four classes of two severities each.
AlertClassMap default_class_map();

enum class MapViolation {
    TooFewClasses,
    TooManyClasses,
    RangeTooWide,
    RangeEmpty,
    NotContiguous,
    CoverageGap,
    OutOfOrder,
};

const char* to_string(MapViolation v);

// Empty result means the map is valid; all violations are reported.
std::vector<MapViolation> validate_class_map(const AlertClassMap& map);

// Total on severity 0..7 for valid maps; throws Error{ValidationError} outside.
std::size_t classify(int severity, const AlertClassMap& map);

enum class Channel { Log, Console, EmailStub, SmsStub, DashboardBuffer };

const char* to_string(Channel c);
std::optional<Channel> parse_channel(const std::string& text);

struct RoutingRules {
    std::map<std::string, std::set<std::string>> class_roles;  // class name -> roles
    std::map<std::string, std::set<Channel>> role_channels;    // role -> channels

    // Classes routed to no role: legal, but worth a config warning.
    std::vector<std::string> unrouted_classes(const AlertClassMap& map) const;
};

struct Delivery {
    std::string role;
    Channel channel = Channel::Log;
    std::string alert_class;
    int severity = 0;
    std::string event;
    UtcMillis ts = 0;
};

inline constexpr std::size_t kDashboardCapacity = 256;

// Fans alerts out to channels. Stub channels append to an outbox file; the
// dashboard buffer keeps the newest entries for `scg status`. Channel
// failures are recorded, never propagated.
class AlertRouter {
public:
    AlertRouter(AlertClassMap map, RoutingRules rules, std::filesystem::path outbox,
                std::size_t dashboard_capacity = kDashboardCapacity);

    std::vector<Delivery> route(const store::SecurityLogEntry& event);

    std::vector<Delivery> dashboard() const;
    const AlertClassMap& class_map() const { return map_; }

private:
    AlertClassMap map_;
    RoutingRules rules_;
    std::filesystem::path outbox_;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::deque<Delivery> dashboard_;
};

} // namespace scg::alerting
