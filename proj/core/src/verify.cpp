#include "rampcast/verify.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "rampcast/error.hpp"
#include "rampcast/solargeo.hpp"
#include "rampcast/text.hpp"

namespace rampcast::verify {

using std::chrono::hours;

std::vector<Instant> schedule_day(Instant sunrise, Instant sunset) {
  const Instant lo = sunrise + hours{1};
  const Instant hi = sunset - hours{3};
  std::vector<Instant> out;
  for (Instant h = std::chrono::ceil<hours>(lo); h <= hi; h += hours{1}) out.push_back(h);
  return out;
}

std::vector<Instant> schedule_inits(CivilDate first, CivilDate last, ReferencePoint ref) {
  if (!first.ok() || !last.ok()) fail(Errc::InvalidArgument, "invalid schedule date");
  const ramp::DaylightCalendar cal(ref);
  std::vector<Instant> out;
  for (auto d = std::chrono::sys_days{first}; d <= std::chrono::sys_days{last}; d += std::chrono::days{1}) {
    const auto b = cal.bounds(CivilDate{d});
    if (!b) continue;
    const auto day = schedule_day(b->first, b->second);
    out.insert(out.end(), day.begin(), day.end());
  }
  return out;
}

std::string to_string(CaseLabel label) {
  switch (label) {
    case CaseLabel::Ramp: return "ramp";
    case CaseLabel::Nonramp: return "nonramp";
    case CaseLabel::Unlabeled: return "unlabeled";
  }
  return "?";
}

CaseLabel parse_case_label(const std::string& text) {
  if (text == "ramp") return CaseLabel::Ramp;
  if (text == "nonramp") return CaseLabel::Nonramp;
  if (text == "unlabeled") return CaseLabel::Unlabeled;
  fail(Errc::ParseError, "unknown case label: " + text);
}

bool CaseWindow::contains(Instant init, const RampEvent& e) const noexcept {
  const Instant t = anchor_end ? e.t_end : e.t_start;
  return t > init + open && t <= init + close;
}

std::string CaseWindow::describe() const {
  return "(init+" + std::to_string(open.count()) + "min, init+" + std::to_string(close.count()) + "min] on " +
         (anchor_end ? "t_end" : "t_start");
}

bool window_has_event(Instant init, std::span<const RampEvent> events, const CaseWindow& window) {
  // Sorted by t_start and t_end >= t_start, so nothing past init + close can qualify.
  for (const auto& e : events) {
    if (e.t_start > init + window.close) break;
    if (window.contains(init, e)) return true;
  }
  return false;
}

std::vector<ForecastCase> label_ramp_cases(std::span<const Instant> inits, std::span<const RampEvent> events,
                                           const CaseWindow& window) {
  std::vector<ForecastCase> out;
  out.reserve(inits.size());
  for (const Instant t : inits)
    out.push_back({t, window_has_event(t, events, window) ? CaseLabel::Ramp : CaseLabel::Unlabeled, std::nullopt});
  return out;
}

NonrampMatch match_nonramp_cases(std::span<const ForecastCase> ramp_cases, std::span<const Instant> inits,
                                 std::span<const RampEvent> events, const CaseWindow& window) {
  const std::set<Instant> scheduled(inits.begin(), inits.end());
  std::vector<const ForecastCase*> ramps;
  for (const auto& c : ramp_cases)
    if (c.label == CaseLabel::Ramp) ramps.push_back(&c);
  std::sort(ramps.begin(), ramps.end(), [](auto* a, auto* b) { return a->init_time < b->init_time; });

  NonrampMatch m;
  std::map<Instant, Instant> accepted;
  for (const auto* r : ramps) {
    for (const auto offset : {-std::chrono::days{1}, std::chrono::days{1}}) {
      const Instant cand = r->init_time + offset;
      if (!scheduled.count(cand) || window_has_event(cand, events, window)) continue;
      ++m.candidates_before_dedup;
      accepted.emplace(cand, r->init_time);
    }
  }
  for (const auto& [t, src] : accepted) m.cases.push_back({t, CaseLabel::Nonramp, src});
  return m;
}

CaseList build_case_list(std::span<const Instant> inits, std::span<const RampEvent> events, const CaseWindow& window) {
  CaseList list;
  list.cases = label_ramp_cases(inits, events, window);
  const auto match = match_nonramp_cases(list.cases, inits, events, window);
  std::map<Instant, const ForecastCase*> nonramp;
  for (const auto& c : match.cases) nonramp[c.init_time] = &c;
  for (auto& c : list.cases) {
    if (c.label == CaseLabel::Ramp) {
      ++list.ramp;
    } else if (auto it = nonramp.find(c.init_time); it != nonramp.end()) {
      c.label = CaseLabel::Nonramp;
      c.matched_to = it->second->matched_to;
      ++list.nonramp;
    }
  }
  list.nonramp_before_dedup = match.candidates_before_dedup;
  return list;
}

void write_cases_csv(std::ostream& out, std::span<const ForecastCase> cases) {
  out << "init_utc,label,matched_to\n";
  for (const auto& c : cases)
    out << format_iso8601(c.init_time) << ',' << to_string(c.label) << ','
        << (c.matched_to ? format_iso8601(*c.matched_to) : std::string()) << '\n';
}

std::vector<ForecastCase> read_cases_csv(std::istream& in) {
  std::string line;
  if (!next_data_line(in, line) || trim(line) != "init_utc,label,matched_to")
    fail(Errc::ParseError, "unexpected case list header");
  std::vector<ForecastCase> out;
  while (next_data_line(in, line)) {
    if (trim(line).empty()) continue;
    const auto cols = split_csv(line);
    if (cols.size() != 3) fail(Errc::ParseError, "case list row needs 3 columns: " + line);
    ForecastCase c;
    c.init_time = parse_iso8601(trim(cols[0]));
    c.label = parse_case_label(std::string(trim(cols[1])));
    if (!trim(cols[2]).empty()) c.matched_to = parse_iso8601(trim(cols[2]));
    out.push_back(c);
  }
  return out;
}

}  // namespace rampcast::verify
