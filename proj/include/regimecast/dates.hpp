#pragma once

#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace regimecast {

/// Calendar date at daily resolution.
using Date = std::chrono::sys_days;

/// Construct a date from civil components.
inline Date make_date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year},
                                        std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) throw std::invalid_argument("make_date: invalid civil date");
  return std::chrono::sys_days{ymd};
}

/// Parse "YYYY-MM-DD".
inline Date parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(std::string(text).c_str(), "%d-%u-%u", &y, &m, &d) != 3)
    throw std::invalid_argument("parse_date: expected YYYY-MM-DD, got '" +
                                std::string(text) + "'");
  return make_date(y, m, d);
}

/// Format as "YYYY-MM-DD".
inline std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

/// Day of week with Monday = 0 ... Sunday = 6.
inline int day_of_week(Date date) {
  const std::chrono::weekday wd{date};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

/// Parse an ISO-8601 hourly timestamp ("YYYY-MM-DD HH:MM[:SS]" or with 'T').
/// Returns the date and hour; minutes/seconds must be zero for hourly data.
inline std::pair<Date, int> parse_timestamp(std::string_view text) {
  int y = 0, hh = 0, mm = 0, ss = 0;
  unsigned mo = 0, dd = 0;
  char sep = 0;
  const std::string s(text);
  const int got = std::sscanf(s.c_str(), "%d-%u-%u%c%d:%d:%d", &y, &mo, &dd,
                              &sep, &hh, &mm, &ss);
  if (got < 6 || (sep != 'T' && sep != ' '))
    throw std::invalid_argument("parse_timestamp: expected ISO-8601 hourly timestamp, got '" +
                                s + "'");
  if (hh < 0 || hh > 23 || mm != 0 || ss != 0)
    throw std::invalid_argument("parse_timestamp: non-hourly timestamp '" + s + "'");
  return {make_date(y, mo, dd), hh};
}

}  // namespace regimecast
