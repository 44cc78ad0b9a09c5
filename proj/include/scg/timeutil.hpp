#pragma once

#include <chrono>
#include <cstdint>
#include <string>

namespace scg {

// UTC timestamps are carried as milliseconds since the Unix epoch and
// serialized as RFC 3339 ("2017-03-20T12:00:00Z" or with .mmm fraction).
using UtcMillis = std::int64_t;

std::string format_rfc3339(UtcMillis ms);

// Throws Error{ParseError} on malformed input. Accepts an optional
// fractional-second part and requires a trailing 'Z' or +00:00 offset.
UtcMillis parse_rfc3339(const std::string& text);

UtcMillis now_utc_millis();

} // namespace scg
