#include "rampcast/time.hpp"

#include <charconv>
#include <cstdio>

#include "rampcast/error.hpp"

namespace rampcast {

using namespace std::chrono;

namespace {

int parse_int(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  if (pos + len > text.size()) fail(Errc::ParseError, "timestamp too short: " + std::string(text));
  const auto* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len)
    fail(Errc::ParseError, "bad timestamp field in: " + std::string(text));
  return value;
}

}  // namespace

std::string format_iso8601(Instant t) {
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), long(hms.hours().count()),
                long(hms.minutes().count()), long(hms.seconds().count()));
  return buf;
}

Instant parse_iso8601(std::string_view text) {
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':')
    fail(Errc::ParseError, "not an ISO8601 UTC timestamp: " + std::string(text));
  const year_month_day ymd{year{parse_int(text, 0, 4)}, month{unsigned(parse_int(text, 5, 2))},
                           day{unsigned(parse_int(text, 8, 2))}};
  if (!ymd.ok()) fail(Errc::ParseError, "invalid calendar date: " + std::string(text));
  const int hh = parse_int(text, 11, 2);
  const int mm = parse_int(text, 14, 2);
  int ss = 0;
  if (text.size() >= 19) {
    if (text[16] != ':') fail(Errc::ParseError, "bad seconds separator: " + std::string(text));
    ss = parse_int(text, 17, 2);
  }
  if (hh > 23 || mm > 59 || ss > 60) fail(Errc::ParseError, "time out of range: " + std::string(text));
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_date(CivilDate d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(d.year()), unsigned(d.month()), unsigned(d.day()));
  return buf;
}

CivilDate parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    fail(Errc::ParseError, "not a YYYY-MM-DD date: " + std::string(text));
  const year_month_day ymd{year{parse_int(text, 0, 4)}, month{unsigned(parse_int(text, 5, 2))},
                           day{unsigned(parse_int(text, 8, 2))}};
  if (!ymd.ok()) fail(Errc::ParseError, "invalid calendar date: " + std::string(text));
  return ymd;
}

CivilDate civil_date(Instant t) { return year_month_day{floor<days>(t)}; }

Instant midnight(CivilDate d) { return Instant{sys_days{d}}; }

double utc_hours(Instant t) {
  const auto since = t - floor<days>(t);
  return double(since.count()) / 3600.0;
}

int day_of_year(Instant t) {
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const sys_days jan1{ymd.year() / January / 1};
  return int((day - jan1).count()) + 1;
}

int utc_month(Instant t) { return int(unsigned(year_month_day{floor<days>(t)}.month())); }

bool on_cadence(Instant t) {
  return t.time_since_epoch().count() % duration_cast<seconds>(kStep).count() == 0;
}

}  // namespace rampcast
