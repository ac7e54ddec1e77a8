#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace heatlab {

using Timestamp = std::chrono::sys_seconds;

/// Accepts `YYYY-MM-DDTHH:MM:SSZ` (the `Z` may also be `+00:00` or omitted).
Timestamp parse_iso8601(std::string_view text);
std::string format_iso8601(Timestamp t);

struct LocalTime {
    int year = 0;
    unsigned month = 0;
    unsigned day = 0;
    double hour = 0.0; ///< fractional hour of day, [0, 24)
};

/// Civil time at a fixed offset from UTC; no daylight-saving rules.
LocalTime to_local(Timestamp t, double utc_offset_hours);

} // namespace heatlab
