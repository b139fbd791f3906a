#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "rampcast/error.hpp"
#include "rampcast/parallel.hpp"
#include "rampcast/text.hpp"
#include "rampcast/verify.hpp"

namespace rampcast::verify {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double crps_ensemble(std::span<const double> members, double obs) {
  if (members.empty()) fail(Errc::InvalidArgument, "CRPS needs at least one member");
  std::vector<double> x(members.begin(), members.end());
  std::sort(x.begin(), x.end());
  const double e = double(x.size());
  CompensatedSum abs_err, spread;
  for (std::size_t i = 0; i < x.size(); ++i) {
    abs_err += std::fabs(x[i] - obs);
    // sum_ij |x_i - x_j| = 2 sum_i (2i - E + 1) x_(i) over the sorted members.
    spread += (2.0 * double(i) - e + 1.0) * x[i];
  }
  return abs_err.value() / e - 2.0 * spread.value() / (2.0 * e * e);
}

ScoreData::ScoreData(std::vector<std::string> stations, std::vector<double> p95, std::vector<Instant> inits,
                     std::vector<int> leads, std::size_t n_members)
    : station_ids(std::move(stations)),
      p95_kw(std::move(p95)),
      init_times(std::move(inits)),
      lead_minutes(std::move(leads)),
      members(n_members) {
  if (station_ids.size() != p95_kw.size()) fail(Errc::InvalidArgument, "one P95 per station required");
  if (members == 0) fail(Errc::InvalidArgument, "ensemble size must be >= 1");
  obs.assign(this->stations() * this->forecasts() * this->leads(), kNaN);
  pred.assign(obs.size() * members, kNaN);
}

void ScoreData::set_forecast(std::size_t n, const power::PowerForecast& fc) {
  if (fc.members != members) fail(Errc::InvalidArgument, "forecast ensemble size differs from the score grid");
  if (fc.lead_minutes != lead_minutes) fail(Errc::InvalidArgument, "forecast leads differ from the score grid");
  for (std::size_t fs = 0; fs < fc.stations(); ++fs) {
    const auto it = std::find(station_ids.begin(), station_ids.end(), fc.station_ids[fs]);
    if (it == station_ids.end()) continue;
    const std::size_t s = std::size_t(it - station_ids.begin());
    for (std::size_t l = 0; l < leads(); ++l)
      for (std::size_t m = 0; m < members; ++m) members_at(s, n, l)[m] = fc.at(m, l, fs);
  }
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::NRMSE: return "nrmse";
    case Metric::NMAE: return "nmae";
    case Metric::NCRPS: return "ncrps";
  }
  return "?";
}

namespace {

MetricTable compute(const ScoreData& d, std::span<const std::size_t> rows_in, Metric metric) {
  std::vector<std::size_t> rows(rows_in.begin(), rows_in.end());
  if (rows.empty()) {
    rows.resize(d.forecasts());
    std::iota(rows.begin(), rows.end(), 0);
  }
  for (std::size_t n : rows)
    if (n >= d.forecasts()) fail(Errc::InvalidArgument, "score row out of range");
  const std::size_t S = d.stations(), L = d.leads(), E = d.members;
  for (double p : d.p95_kw)
    if (!(p > 0.0)) fail(Errc::InvalidArgument, "P95 normalization must be positive");

  MetricTable t;
  t.metric = metric;
  t.per_station_lead.assign(S * L, kNaN);
  t.per_station.assign(S, kNaN);
  t.per_lead.assign(L, kNaN);
  t.samples.assign(S * L, 0);

  // Each station is reduced sequentially in row order, so results never depend on the
  // worker count.
  parallel_for(S, [&](std::size_t s) {
    std::vector<CompensatedSum> lead_sum(L);
    CompensatedSum total;
    std::size_t total_n = 0;
    for (std::size_t n : rows)
      for (std::size_t l = 0; l < L; ++l) {
        const double y = d.obs[d.obs_index(s, n, l)];
        if (std::isnan(y)) continue;
        const double* x = d.members_at(s, n, l);
        if (std::any_of(x, x + E, [](double v) { return std::isnan(v); })) continue;
        double v = 0.0;
        if (metric == Metric::NCRPS) {
          v = crps_ensemble(std::span<const double>(x, E), y);
        } else {
          CompensatedSum mean;
          for (std::size_t m = 0; m < E; ++m) mean += x[m];
          const double err = mean.value() / double(E) - y;
          v = metric == Metric::NRMSE ? err * err : std::fabs(err);
        }
        lead_sum[l] += v;
        total += v;
        ++t.samples[s * L + l];
        ++total_n;
      }
    auto finish = [&](double sum, std::size_t count) {
      if (count == 0) return kNaN;
      const double mean = sum / double(count);
      return (metric == Metric::NRMSE ? std::sqrt(mean) : mean) / d.p95_kw[s];
    };
    for (std::size_t l = 0; l < L; ++l) t.per_station_lead[s * L + l] = finish(lead_sum[l].value(), t.samples[s * L + l]);
    t.per_station[s] = finish(total.value(), total_n);
  });

  std::size_t stations_with_data = 0;
  CompensatedSum overall;
  for (std::size_t s = 0; s < S; ++s) {
    if (std::isnan(t.per_station[s])) continue;
    overall += t.per_station[s];
    ++stations_with_data;
  }
  if (stations_with_data == 0) fail(Errc::EmptyOverlap, "no (station, forecast, lead) sample with both forecast and observation");
  t.overall = overall.value() / double(stations_with_data);
  for (std::size_t l = 0; l < L; ++l) {
    CompensatedSum s_sum;
    std::size_t cnt = 0;
    for (std::size_t s = 0; s < S; ++s) {
      const double v = t.per_station_lead[s * L + l];
      if (std::isnan(v)) continue;
      s_sum += v;
      ++cnt;
    }
    if (cnt) t.per_lead[l] = s_sum.value() / double(cnt);
  }
  return t;
}

}  // namespace

MetricTable nrmse(const ScoreData& data, std::span<const std::size_t> rows) {
  return compute(data, rows, Metric::NRMSE);
}
MetricTable nmae(const ScoreData& data, std::span<const std::size_t> rows) { return compute(data, rows, Metric::NMAE); }
MetricTable ncrps(const ScoreData& data, std::span<const std::size_t> rows) {
  return compute(data, rows, Metric::NCRPS);
}

const MetricTable& ScoreTable::get(Metric m) const {
  switch (m) {
    case Metric::NRMSE: return nrmse;
    case Metric::NMAE: return nmae;
    case Metric::NCRPS: return ncrps;
  }
  return nrmse;
}

ScoreTable score_table(const ScoreData& data, std::span<const std::size_t> rows, const std::string& subset) {
  ScoreTable t;
  t.subset = subset;
  t.station_ids = data.station_ids;
  t.lead_minutes = data.lead_minutes;
  t.n_forecasts = rows.empty() ? data.forecasts() : rows.size();
  t.members = data.members;
  t.nrmse = nrmse(data, rows);
  t.nmae = nmae(data, rows);
  t.ncrps = ncrps(data, rows);
  for (double v : t.nrmse.per_station)
    if (!std::isnan(v)) ++t.n_stations;
  return t;
}

double relative_difference(double ramp, double nonramp) {
  if (nonramp == 0.0) fail(Errc::ZeroDenominator, "nonramp score is zero");
  return (ramp - nonramp) / nonramp;
}

std::optional<double> DegradationReport::at(int lead_minutes, Metric m) const {
  for (const auto& e : entries)
    if (e.lead_minutes == lead_minutes && e.metric == m && !e.zero_denominator) return e.relative_difference;
  return std::nullopt;
}

DegradationReport degradation(const ScoreTable& ramp, const ScoreTable& nonramp) {
  if (ramp.lead_minutes != nonramp.lead_minutes) fail(Errc::InvalidArgument, "score tables have different leads");
  DegradationReport r;
  for (std::size_t l = 0; l < ramp.lead_minutes.size(); ++l)
    for (const Metric m : kMetrics) {
      DegradationEntry e;
      e.lead_minutes = ramp.lead_minutes[l];
      e.metric = m;
      const double a = ramp.get(m).per_lead[l], b = nonramp.get(m).per_lead[l];
      if (std::isnan(a) || std::isnan(b)) {
        e.relative_difference = kNaN;
      } else {
        try {
          e.relative_difference = relative_difference(a, b);
        } catch (const Error& err) {
          if (err.code() != Errc::ZeroDenominator) throw;
          e.relative_difference = kNaN;
          e.zero_denominator = true;
        }
      }
      r.entries.push_back(e);
    }
  return r;
}

void write_scores_csv(std::ostream& out, std::span<const ScoreTable> tables, bool header) {
  if (header) out << "subset,lead_minutes,metric,value,n_forecasts,n_stations\n";
  for (const auto& t : tables) {
    for (std::size_t l = 0; l <= t.lead_minutes.size(); ++l)
      for (const Metric m : kMetrics) {
        const bool all = l == t.lead_minutes.size();
        const double v = all ? t.get(m).overall : t.get(m).per_lead[l];
        out << t.subset << ',' << (all ? std::string("all") : std::to_string(t.lead_minutes[l])) << ','
            << to_string(m) << ',' << format_number(v) << ',' << t.n_forecasts << ',' << t.n_stations << '\n';
      }
  }
}

void write_degradation_csv(std::ostream& out, const DegradationReport& report) {
  out << "lead_minutes,metric,relative_difference\n";
  for (const auto& e : report.entries)
    out << e.lead_minutes << ',' << to_string(e.metric) << ',' << format_number(e.relative_difference) << '\n';
}

}  // namespace rampcast::verify
