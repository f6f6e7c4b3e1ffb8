#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace thermocast {

using TimePoint = std::chrono::sys_seconds;

// Parses RFC-3339 timestamps ("2023-07-17T09:01:00Z", "2023-07-17T12:01:00+03:00").
// Seconds, fractional seconds and the zone suffix are optional; a missing zone
// is read as UTC. Throws std::invalid_argument on malformed input.
TimePoint parse_timestamp(std::string_view text);

// "2023-07-17T09:00:00Z"
std::string format_timestamp(TimePoint t);

// "2023-07-17"
std::string format_date(TimePoint t);
TimePoint parse_date(std::string_view text);

TimePoint floor_hour(TimePoint t);

// Hour of day (0..23), day of year (1..366) and year length in UTC.
int hour_of_day(TimePoint t);
int day_of_year(TimePoint t);
int days_in_year(TimePoint t);

// Deterministic per-component seed derivation (splitmix64 over an FNV-1a tag hash).
std::uint64_t derive_seed(std::uint64_t base, std::string_view component);

// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace thermocast
