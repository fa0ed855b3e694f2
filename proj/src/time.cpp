#include "visitscope/time.hpp"

#include <charconv>
#include <cstdio>

namespace visitscope {

// Howard Hinnant's civil calendar algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

namespace {

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<int>(yoe + era * 400) + (m <= 2);
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(int y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

template <class Int>
bool read_fixed(std::string_view s, std::size_t pos, std::size_t width, Int& out) {
  if (pos + width > s.size()) return false;
  for (std::size_t i = pos; i < pos + width; ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + width, out);
  return ec == std::errc{} && p == s.data() + pos + width;
}

}  // namespace

std::optional<Timestamp> make_timestamp(const CivilTime& c) {
  if (c.month < 1 || c.month > 12) return std::nullopt;
  if (c.day < 1 || c.day > days_in_month(c.year, c.month)) return std::nullopt;
  if (c.hour > 23 || c.minute > 59 || c.second > 59) return std::nullopt;
  return days_from_civil(c.year, c.month, c.day) * kSecondsPerDay +
         static_cast<std::int64_t>(c.hour) * kSecondsPerHour + c.minute * 60 + c.second;
}

CivilTime to_civil(Timestamp t) {
  CivilTime c;
  const std::int64_t days = day_index(t);
  std::int64_t rem = t - days * kSecondsPerDay;
  civil_from_days(days, c.year, c.month, c.day);
  c.hour = static_cast<unsigned>(rem / kSecondsPerHour);
  rem %= kSecondsPerHour;
  c.minute = static_cast<unsigned>(rem / 60);
  c.second = static_cast<unsigned>(rem % 60);
  return c;
}

int day_of_week(Timestamp t) {
  // 1970-01-01 was a Thursday (index 3).
  std::int64_t w = (day_index(t) + 3) % 7;
  if (w < 0) w += 7;
  return static_cast<int>(w);
}

int hour_of_day(Timestamp t) {
  return static_cast<int>((t - day_start(t)) / kSecondsPerHour);
}

std::string format_iso8601(Timestamp t) {
  const CivilTime c = to_civil(t);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:%02u:%02u", c.year, c.month, c.day, c.hour,
                c.minute, c.second);
  return buf;
}

std::string format_date(Timestamp t) {
  const CivilTime c = to_civil(t);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
  return buf;
}

std::optional<Timestamp> parse_iso8601(std::string_view s) {
  CivilTime c;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!read_fixed(s, 0, 4, c.year) || !read_fixed(s, 5, 2, c.month) || !read_fixed(s, 8, 2, c.day))
    return std::nullopt;
  std::size_t pos = 10;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    if (s.size() < pos + 9 || s[pos + 3] != ':' || s[pos + 6] != ':') return std::nullopt;
    if (!read_fixed(s, pos + 1, 2, c.hour) || !read_fixed(s, pos + 4, 2, c.minute) ||
        !read_fixed(s, pos + 7, 2, c.second))
      return std::nullopt;
    pos += 9;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      const std::size_t digits = pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      if (pos == digits) return std::nullopt;
    }
    if (pos < s.size() && s[pos] == 'Z') ++pos;
    if (pos != s.size()) return std::nullopt;
  }
  return make_timestamp(c);
}

std::optional<Timestamp> parse_with_format(std::string_view s, std::string_view format) {
  CivilTime c;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < format.size(); ++i) {
    if (format[i] != '%') {
      if (pos >= s.size() || s[pos] != format[i]) return std::nullopt;
      ++pos;
      continue;
    }
    if (++i >= format.size()) return std::nullopt;
    bool ok = true;
    switch (format[i]) {
      case 'Y': ok = read_fixed(s, pos, 4, c.year); pos += 4; break;
      case 'm': ok = read_fixed(s, pos, 2, c.month); pos += 2; break;
      case 'd': ok = read_fixed(s, pos, 2, c.day); pos += 2; break;
      case 'H': ok = read_fixed(s, pos, 2, c.hour); pos += 2; break;
      case 'M': ok = read_fixed(s, pos, 2, c.minute); pos += 2; break;
      case 'S': ok = read_fixed(s, pos, 2, c.second); pos += 2; break;
      case '%': ok = pos < s.size() && s[pos] == '%'; ++pos; break;
      default: return std::nullopt;
    }
    if (!ok) return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  return make_timestamp(c);
}

}  // namespace visitscope
