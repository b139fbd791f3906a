#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace rampcast {

using Instant = std::chrono::sys_seconds;
using CivilDate = std::chrono::year_month_day;

/// Native cadence of every field and power series.
inline constexpr std::chrono::minutes kStep{15};

/// "2020-06-21T12:00:00Z"
std::string format_iso8601(Instant t);
/// Accepts "YYYY-MM-DDTHH:MM[:SS][Z]" and a space instead of 'T'.
Instant parse_iso8601(std::string_view text);

std::string format_date(CivilDate d);
CivilDate parse_date(std::string_view text);

CivilDate civil_date(Instant t);
Instant midnight(CivilDate d);
/// Fractional hours since 00:00 UTC.
double utc_hours(Instant t);
/// 1-based ordinal day in the UTC year.
int day_of_year(Instant t);
int utc_month(Instant t);
bool on_cadence(Instant t);

}  // namespace rampcast
