#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace pulsegauge {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

// Accepts "YYYY-MM-DDTHH:MM:SS" with optional fractional seconds and an
// optional "Z" / "+HH:MM" / "-HH:MM" suffix, or a bare "YYYY-MM-DD".
// Throws Error(ParseError) on anything else.
Timestamp parse_timestamp(std::string_view text);
Date parse_date(std::string_view text);

std::string format_timestamp(Timestamp ts);  // 2024-01-05T12:00:00Z
std::string format_date(Date d);             // 2024-01-05

// "3600", "90s", "15m", "1h", "1d", "1w" -> seconds; throws InvalidInput.
std::chrono::seconds parse_duration(std::string_view text);

Timestamp now_utc();

} // namespace pulsegauge
