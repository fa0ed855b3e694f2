#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace visitscope {

/// Seconds since 1970-01-01T00:00:00 on the dataset's own clock.
///
/// No timezone is attached: timestamps are kept exactly as recorded, and
/// calendar fields (day, weekday, hour) are read off that naive clock.
using Timestamp = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kSecondsPerHour = 3600;

std::int64_t days_from_civil(int year, unsigned month, unsigned day);

struct CivilTime {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;
  unsigned hour = 0;
  unsigned minute = 0;
  unsigned second = 0;
};

std::optional<Timestamp> make_timestamp(const CivilTime& c);
CivilTime to_civil(Timestamp t);

/// Calendar day index (floor division, correct for negative stamps).
inline std::int64_t day_index(Timestamp t) {
  std::int64_t d = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) --d;
  return d;
}

inline Timestamp day_start(Timestamp t) { return day_index(t) * kSecondsPerDay; }

/// 0 = Monday ... 6 = Sunday.
int day_of_week(Timestamp t);
int hour_of_day(Timestamp t);

/// `YYYY-MM-DDTHH:MM:SS`
std::string format_iso8601(Timestamp t);
std::string format_date(Timestamp t);

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DD HH:MM:SS`, `YYYY-MM-DDTHH:MM:SS`, with an
/// optional trailing `Z` or fractional seconds (truncated).
std::optional<Timestamp> parse_iso8601(std::string_view s);

/// Parses `s` against a strftime-style pattern. Supported conversions:
/// %Y %m %d %H %M %S %%; everything else must match literally.
std::optional<Timestamp> parse_with_format(std::string_view s, std::string_view format);

}  // namespace visitscope
