#include "scg/alerting.hpp"

#include <fstream>
#include <iostream>

#include <json.hpp>

#include "scg/errors.hpp"

namespace scg::alerting {

using nlohmann::json;

AlertClassMap default_class_map() {
    return AlertClassMap{{
        {"critical", 0, 1},
        {"error", 2, 3},
        {"warning", 4, 5},
        {"info", 6, 7},
    }};
}

const char* to_string(MapViolation v) {
    switch (v) {
    case MapViolation::TooFewClasses: return "TooFewClasses";
    case MapViolation::TooManyClasses: return "TooManyClasses";
    case MapViolation::RangeTooWide: return "RangeTooWide";
    case MapViolation::RangeEmpty: return "RangeEmpty";
    case MapViolation::NotContiguous: return "NotContiguous";
    case MapViolation::CoverageGap: return "CoverageGap";
    case MapViolation::OutOfOrder: return "OutOfOrder";
    }
    return "?";
}

std::vector<MapViolation> validate_class_map(const AlertClassMap& map) {
    std::vector<MapViolation> violations;
    if (map.classes.size() < 4) violations.push_back(MapViolation::TooFewClasses);
    if (map.classes.size() > 8) violations.push_back(MapViolation::TooManyClasses);

    bool ranges_ok = true;
    for (const auto& cls : map.classes) {
        int width = cls.severity_high - cls.severity_low + 1;
        if (width < 1) {
            violations.push_back(MapViolation::RangeEmpty);
            ranges_ok = false;
        } else if (width > 2) {
            violations.push_back(MapViolation::RangeTooWide);
            ranges_ok = false;
        }
        if (cls.severity_low < 0 || cls.severity_high > 7) {
            violations.push_back(MapViolation::CoverageGap);
            ranges_ok = false;
        }
    }

    if (ranges_ok) {
        // Ordered most-severe first and jointly covering exactly {0..7}.
        int expected = 0;
        bool contiguous = true;
        for (const auto& cls : map.classes) {
            if (cls.severity_low != expected) {
                contiguous = false;
                break;
            }
            expected = cls.severity_high + 1;
        }
        if (!contiguous) {
            bool sorted = true;
            for (std::size_t i = 1; i < map.classes.size(); ++i)
                if (map.classes[i].severity_low < map.classes[i - 1].severity_high) sorted = false;
            violations.push_back(sorted ? MapViolation::NotContiguous : MapViolation::OutOfOrder);
        } else if (expected != 8) {
            violations.push_back(MapViolation::CoverageGap);
        }
    }
    return violations;
}

std::size_t classify(int severity, const AlertClassMap& map) {
    if (severity < 0 || severity > 7)
        throw Error(ErrorCode::ValidationError,
                    "severity must be 0..7, got " + std::to_string(severity));
    if (!validate_class_map(map).empty())
        throw Error(ErrorCode::ValidationError, "invalid alert class map");
    for (std::size_t i = 0; i < map.classes.size(); ++i)
        if (severity >= map.classes[i].severity_low && severity <= map.classes[i].severity_high)
            return i;
    throw Error(ErrorCode::ValidationError, "severity not covered by map");
}

const char* to_string(Channel c) {
    switch (c) {
    case Channel::Log: return "log";
    case Channel::Console: return "console";
    case Channel::EmailStub: return "email-stub";
    case Channel::SmsStub: return "sms-stub";
    case Channel::DashboardBuffer: return "dashboard-buffer";
    }
    return "?";
}

std::optional<Channel> parse_channel(const std::string& text) {
    if (text == "log") return Channel::Log;
    if (text == "console") return Channel::Console;
    if (text == "email-stub") return Channel::EmailStub;
    if (text == "sms-stub") return Channel::SmsStub;
    if (text == "dashboard-buffer") return Channel::DashboardBuffer;
    return std::nullopt;
}

std::vector<std::string> RoutingRules::unrouted_classes(const AlertClassMap& map) const {
    std::vector<std::string> warnings;
    for (const auto& cls : map.classes) {
        auto it = class_roles.find(cls.name);
        if (it == class_roles.end() || it->second.empty()) warnings.push_back(cls.name);
    }
    return warnings;
}

AlertRouter::AlertRouter(AlertClassMap map, RoutingRules rules, std::filesystem::path outbox,
                         std::size_t dashboard_capacity)
    : map_(std::move(map)), rules_(std::move(rules)), outbox_(std::move(outbox)),
      capacity_(dashboard_capacity) {
    auto violations = validate_class_map(map_);
    if (!violations.empty())
        throw Error(ErrorCode::ValidationError, "invalid alert class map");
}

std::vector<Delivery> AlertRouter::route(const store::SecurityLogEntry& event) {
    std::size_t cls_index = classify(event.severity, map_);
    const std::string& cls_name = map_.classes[cls_index].name;

    std::vector<Delivery> deliveries;
    auto roles_it = rules_.class_roles.find(cls_name);
    if (roles_it != rules_.class_roles.end()) {
        for (const auto& role : roles_it->second) {
            auto ch_it = rules_.role_channels.find(role);
            if (ch_it == rules_.role_channels.end()) continue;
            for (Channel channel : ch_it->second)
                deliveries.push_back(
                    {role, channel, cls_name, event.severity, event.event, event.ts});
        }
    }

    std::lock_guard lock(mutex_);
    for (const auto& d : deliveries) {
        switch (d.channel) {
        case Channel::Console:
            std::cerr << "[alert/" << d.alert_class << "] " << d.event << "\n";
            break;
        case Channel::EmailStub:
        case Channel::SmsStub: {
            try {
                std::ofstream out(outbox_, std::ios::app);
                json obj = json::object();
                obj["channel"] = to_string(d.channel);
                obj["class"] = d.alert_class;
                obj["event"] = d.event;
                obj["role"] = d.role;
                obj["severity"] = d.severity;
                obj["ts"] = format_rfc3339(d.ts);
                out << obj.dump() << '\n';
            } catch (const std::exception&) {
                // Delivery failure must never block the pipeline; callers log
                // it from the returned delivery list.
            }
            break;
        }
        case Channel::Log:
        case Channel::DashboardBuffer:
            break; // the event is already in the security log
        }
    }

    // Every routed event lands on the dashboard, newest kept.
    Delivery dash{"", Channel::DashboardBuffer, cls_name, event.severity, event.event, event.ts};
    dashboard_.push_back(dash);
    while (dashboard_.size() > capacity_) dashboard_.pop_front();
    return deliveries;
}

std::vector<Delivery> AlertRouter::dashboard() const {
    std::lock_guard lock(mutex_);
    return {dashboard_.begin(), dashboard_.end()};
}

} // namespace scg::alerting
