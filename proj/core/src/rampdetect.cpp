#include "rampcast/rampdetect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rampcast/error.hpp"
#include "rampcast/parallel.hpp"
#include "rampcast/solargeo.hpp"

namespace rampcast::ramp {

using ingest::RasterField;
using ingest::StationSeries;

std::optional<std::size_t> AggregateSeries::index_of(Instant t) const noexcept {
  if (timestamps.empty() || t < timestamps.front() || t > timestamps.back()) return std::nullopt;
  const auto offset = t - timestamps.front();
  if (offset % kStep != std::chrono::seconds{0}) return std::nullopt;
  return std::size_t(offset / kStep);
}

AggregateSeries aggregate_power(std::span<const StationSeries> stations, double min_coverage) {
  AggregateSeries agg;
  agg.n_stations = stations.size();
  if (stations.empty()) return agg;

  std::vector<std::size_t> order(stations.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return stations[a].meta.id < stations[b].meta.id; });

  Instant first = Instant::max(), last = Instant::min();
  for (const auto& s : stations) {
    if (s.timestamps.empty()) continue;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!on_cadence(s.timestamps[i]) || (i > 0 && s.timestamps[i] - s.timestamps[i - 1] != kStep))
        fail(Errc::CadenceMismatch, "station " + s.meta.id + " is not a regular 15-minute series");
    }
    first = std::min(first, s.timestamps.front());
    last = std::max(last, s.timestamps.back());
  }
  if (first > last) return agg;

  const std::size_t n = std::size_t((last - first) / kStep) + 1;
  agg.timestamps.resize(n);
  for (std::size_t i = 0; i < n; ++i) agg.timestamps[i] = first + i * kStep;
  agg.power_mw.assign(n, 0.0);
  agg.coverage.assign(n, 0.0);
  agg.low_coverage.assign(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    CompensatedSum sum;
    std::size_t valid = 0;
    for (const std::size_t k : order) {
      const auto& s = stations[k];
      if (s.timestamps.empty()) continue;
      const Instant t = agg.timestamps[i];
      if (t < s.timestamps.front() || t > s.timestamps.back()) continue;
      const std::size_t j = std::size_t((t - s.timestamps.front()) / kStep);
      if (!s.quality[j]) continue;
      sum += s.power_kw[j];
      ++valid;
    }
    agg.power_mw[i] = std::max(0.0, sum.value() / 1000.0);
    agg.coverage[i] = double(valid) / double(stations.size());
    agg.low_coverage[i] = agg.coverage[i] < min_coverage ? 1 : 0;
  }
  return agg;
}

bool pair_usable(const AggregateSeries& agg, std::size_t i, const PairFilter& filter) noexcept {
  if (i + 1 >= agg.size()) return false;
  if (agg.coverage[i] <= 0.0 || agg.coverage[i + 1] <= 0.0) return false;
  if (filter.enabled && std::fabs(agg.coverage[i + 1] - agg.coverage[i]) > filter.max_coverage_change + 1e-12)
    return false;
  return true;
}

std::optional<std::pair<Instant, Instant>> DaylightCalendar::bounds(CivilDate d) const {
  const int key = int(std::chrono::sys_days{d}.time_since_epoch().count());
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  std::optional<std::pair<Instant, Instant>> b;
  try {
    b = solargeo::sunrise_sunset(ref_.lat, ref_.lon, d);
  } catch (const Error& e) {
    if (e.code() != Errc::PolarDayNight) throw;
    const Instant noon = midnight(d) + std::chrono::seconds{std::llround((12.0 - ref_.lon / 15.0) * 3600.0)};
    if (solargeo::solar_position(ref_.lat, ref_.lon, noon).sza < solargeo::kSunriseZenith)
      b = std::pair{midnight(d), midnight(d) + std::chrono::hours{24}};
  }
  cache_.emplace(key, b);
  return b;
}

bool DaylightCalendar::daytime_pair(Instant t) const {
  const auto b = bounds(civil_date(t));
  return b && t + kStep >= b->first && t <= b->second;
}

bool DaylightCalendar::daytime(Instant t) const {
  const auto b = bounds(civil_date(t));
  return b && t >= b->first && t <= b->second;
}

double mean_daytime_csi(std::span<const RasterField> frames, CivilDate day, ReferencePoint ref) {
  const DaylightCalendar cal(ref);
  const auto b = cal.bounds(day);
  CompensatedSum sum;
  std::size_t n = 0;
  if (b) {
    for (const auto& f : frames) {
      if (f.kind() != ingest::FieldKind::CSI) fail(Errc::WrongKind, "mean_daytime_csi expects CSI frames");
      if (f.timestamp() < b->first || f.timestamp() > b->second) continue;
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f.valid(i)) continue;
        sum += f.value(i);
        ++n;
      }
    }
  }
  if (n == 0) fail(Errc::NoDaytimeFrames, "no valid daytime CSI on " + format_date(day));
  return sum.value() / double(n);
}

double mean_daytime_csi(const ingest::FieldSequence& seq, CivilDate day, ReferencePoint ref) {
  return mean_daytime_csi(std::span<const RasterField>(seq.fields()), day, ref);
}

std::map<CivilDate, double> daily_mean_csi(std::span<const RasterField> frames, ReferencePoint ref) {
  std::map<CivilDate, std::vector<const RasterField*>> by_day;
  for (const auto& f : frames) by_day[civil_date(f.timestamp())].push_back(&f);
  std::map<CivilDate, double> out;
  for (const auto& [day, list] : by_day) {
    std::vector<RasterField> copy;
    copy.reserve(list.size());
    for (const auto* f : list) copy.push_back(*f);
    try {
      out[day] = mean_daytime_csi(copy, day, ref);
    } catch (const Error& e) {
      if (e.code() != Errc::NoDaytimeFrames) throw;
    }
  }
  return out;
}

std::vector<CivilDate> select_clearsky_days(const std::map<CivilDate, double>& daily_means, double percentile) {
  if (daily_means.size() < 10)
    fail(Errc::InsufficientDays, "clear-sky selection needs >= 10 days, got " + std::to_string(daily_means.size()));
  std::vector<double> means;
  means.reserve(daily_means.size());
  for (const auto& [d, m] : daily_means) means.push_back(m);
  const double cut = ingest::nearest_rank_percentile(means, percentile);
  std::vector<CivilDate> out;
  for (const auto& [d, m] : daily_means)
    if (m > cut) out.push_back(d);
  return out;
}

RampThreshold derive_threshold(const AggregateSeries& agg, std::span<const CivilDate> clearsky_days,
                               ReferencePoint ref, const PairFilter& filter, double percentile) {
  if (clearsky_days.empty()) fail(Errc::InvalidArgument, "derive_threshold needs at least one clear-sky day");
  const DaylightCalendar cal(ref);
  std::vector<CivilDate> days(clearsky_days.begin(), clearsky_days.end());
  std::sort(days.begin(), days.end());

  RampThreshold thr;
  thr.percentile = percentile;
  thr.clearsky_days = days;
  thr.provenance.coverage_filter = filter.enabled;
  thr.provenance.reference = ref;
  double best = -1.0;
  for (std::size_t i = 0; i + 1 < agg.size(); ++i) {
    const Instant t = agg.timestamps[i];
    if (!std::binary_search(days.begin(), days.end(), civil_date(t))) continue;
    if (!cal.daytime_pair(t)) continue;
    if (agg.coverage[i] <= 0.0 || agg.coverage[i + 1] <= 0.0) continue;
    if (!pair_usable(agg, i, filter)) {
      ++thr.provenance.pairs_excluded_coverage;
      continue;
    }
    ++thr.provenance.pairs_considered;
    const double d = std::fabs(agg.power_mw[i + 1] - agg.power_mw[i]);
    if (d > best) {
      best = d;
      thr.provenance.argmax_instant = t;
    }
  }
  if (thr.provenance.pairs_considered == 0)
    fail(Errc::NoValidPairs, "no usable daytime pairs on the clear-sky days");
  thr.delta_p_tr_mw = best;
  thr.rate_mw_per_min = best / 15.0;
  return thr;
}

std::string to_string(Direction d) { return d == Direction::Up ? "up" : "down"; }

Direction parse_direction(const std::string& text) {
  if (text == "up") return Direction::Up;
  if (text == "down") return Direction::Down;
  fail(Errc::ParseError, "unknown ramp direction: " + text);
}

std::vector<RampEvent> detect_ramps(const AggregateSeries& agg, const RampThreshold& thr, const PairFilter& filter) {
  if (!(thr.delta_p_tr_mw > 0.0)) fail(Errc::InvalidThreshold, "ramp threshold must be positive");
  std::vector<RampEvent> events;
  for (std::size_t i = 0; i + 1 < agg.size(); ++i) {
    if (!pair_usable(agg, i, filter)) continue;
    const double dp = agg.power_mw[i + 1] - agg.power_mw[i];
    if (!(std::fabs(dp) > thr.delta_p_tr_mw)) continue;
    events.push_back({agg.timestamps[i], agg.timestamps[i + 1], dp, dp > 0 ? Direction::Up : Direction::Down,
                      std::fabs(dp) / thr.delta_p_tr_mw});
  }
  return events;
}

ExceedanceCounts exceedance_counts(std::span<const RampEvent> events) noexcept {
  ExceedanceCounts c;
  c.absolute = events.size();
  for (const auto& e : events)
    if (e.direction == Direction::Up) ++c.signed_positive;
  return c;
}

std::size_t DiurnalHistogram::total() const noexcept {
  std::size_t n = 0;
  for (std::size_t h = 0; h < 24; ++h) n += up[h] + down[h];
  return n;
}

DiurnalHistogram diurnal_histogram(std::span<const RampEvent> events) noexcept {
  DiurnalHistogram h;
  for (const auto& e : events) {
    const auto hour = std::size_t(std::floor(utc_hours(e.t_start)));
    (e.direction == Direction::Up ? h.up : h.down)[std::min<std::size_t>(hour, 23)]++;
  }
  return h;
}

}  // namespace rampcast::ramp
