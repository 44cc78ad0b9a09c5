#include "scg/timeutil.hpp"

#include <cinttypes>
#include <cstdio>
#include <ctime>

#include "scg/errors.hpp"

namespace scg {

namespace {

bool is_leap(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
    static const int table[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap(year)) return 29;
    return table[month - 1];
}

// Days since 1970-01-01 for a Gregorian civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

} // namespace

std::string format_rfc3339(UtcMillis ms) {
    std::int64_t secs = ms / 1000;
    int millis = static_cast<int>(ms % 1000);
    if (millis < 0) {
        millis += 1000;
        secs -= 1;
    }
    std::int64_t days = secs / 86400;
    int sod = static_cast<int>(secs % 86400);
    if (sod < 0) {
        sod += 86400;
        days -= 1;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[40];
    if (millis != 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", y, m, d, sod / 3600,
                      (sod / 60) % 60, sod % 60, millis);
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d, sod / 3600,
                      (sod / 60) % 60, sod % 60);
    }
    return buf;
}

UtcMillis parse_rfc3339(const std::string& text) {
    int y, mo, d, h, mi, s;
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s,
                    &consumed) != 6 ||
        consumed != 19) {
        throw Error(ErrorCode::ParseError, "bad RFC 3339 timestamp: " + text);
    }
    std::size_t pos = 19;
    int millis = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t start = pos;
        std::int64_t frac = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        if (pos == start || pos - start > 9)
            throw Error(ErrorCode::ParseError, "bad fractional seconds: " + text);
        std::string digits = text.substr(start, pos - start);
        digits.resize(3, '0'); // truncate/pad to milliseconds
        frac = std::stoll(digits.substr(0, 3));
        millis = static_cast<int>(frac);
    }
    std::string tz = text.substr(pos);
    if (tz != "Z" && tz != "z" && tz != "+00:00" && tz != "-00:00")
        throw Error(ErrorCode::ParseError, "timestamp must be UTC: " + text);
    if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, mo) || h > 23 || mi > 59 || s > 60 ||
        h < 0 || mi < 0 || s < 0)
        throw Error(ErrorCode::ParseError, "timestamp fields out of range: " + text);
    if (s == 60) s = 59; // fold leap seconds
    std::int64_t days = days_from_civil(y, mo, d);
    return (days * 86400 + h * 3600 + mi * 60 + s) * 1000 + millis;
}

UtcMillis now_utc_millis() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

} // namespace scg
