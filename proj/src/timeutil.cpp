#include "heatlab/timeutil.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "heatlab/error.hpp"

namespace heatlab {

using namespace std::chrono;

Timestamp parse_iso8601(std::string_view text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    const std::string buf(text);
    int consumed = 0;
    if (std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s, &consumed) != 6) {
        throw Error(Errc::format_error, "timestamp '" + buf + "' is not ISO-8601 (YYYY-MM-DDTHH:MM:SSZ)");
    }
    const std::string_view rest = text.substr(static_cast<std::size_t>(consumed));
    if (!(rest.empty() || rest == "Z" || rest == "+00:00")) {
        throw Error(Errc::format_error, "timestamp '" + buf + "' must be in UTC");
    }
    const year_month_day ymd{year{y} / month{static_cast<unsigned>(mo)} / day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
        throw Error(Errc::format_error, "timestamp '" + buf + "' is not a valid calendar instant");
    }
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_iso8601(Timestamp t) {
    const auto day_point = floor<days>(t);
    const year_month_day ymd{day_point};
    const hh_mm_ss tod{t - day_point};
    char out[32];
    std::snprintf(out, sizeof(out), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
    return out;
}

LocalTime to_local(Timestamp t, double utc_offset_hours) {
    const auto shifted = t + seconds{static_cast<long long>(std::llround(utc_offset_hours * 3600.0))};
    const auto day_point = floor<days>(shifted);
    const year_month_day ymd{day_point};
    const auto secs = duration_cast<seconds>(shifted - day_point).count();
    LocalTime out;
    out.year = static_cast<int>(ymd.year());
    out.month = static_cast<unsigned>(ymd.month());
    out.day = static_cast<unsigned>(ymd.day());
    out.hour = static_cast<double>(secs) / 3600.0;
    return out;
}

} // namespace heatlab
