#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rampcast/power.hpp"
#include "rampcast/rampdetect.hpp"
#include "rampcast/time.hpp"

namespace rampcast::verify {

using ramp::RampEvent;
using ramp::ReferencePoint;

// --- scheduling ------------------------------------------------------------

/// Full hours h with sunrise + 1 h <= h <= sunset - 3 h.
std::vector<Instant> schedule_day(Instant sunrise, Instant sunset);

/// schedule_day over every date in [first, last] at the reference point. Polar nights
/// contribute nothing; polar days use 00:00 to 24:00.
std::vector<Instant> schedule_inits(CivilDate first, CivilDate last, ReferencePoint ref = {});

// --- case labelling --------------------------------------------------------

enum class CaseLabel { Ramp, Nonramp, Unlabeled };
std::string to_string(CaseLabel label);
CaseLabel parse_case_label(const std::string& text);

struct ForecastCase {
  Instant init_time{};
  CaseLabel label = CaseLabel::Unlabeled;
  std::optional<Instant> matched_to;  // ramp init this nonramp case mirrors
};

/// Lead window (init + open, init + close] tested against the event's end (default) or start.
struct CaseWindow {
  std::chrono::minutes open{30};
  std::chrono::minutes close{75};
  bool anchor_end = true;

  bool contains(Instant init, const RampEvent& e) const noexcept;
  std::string describe() const;
};

/// True when any event falls inside the init's window. `events` sorted by t_start.
bool window_has_event(Instant init, std::span<const RampEvent> events, const CaseWindow& window = {});

/// One case per init: Ramp when its window holds at least one event, else Unlabeled.
std::vector<ForecastCase> label_ramp_cases(std::span<const Instant> inits, std::span<const RampEvent> events,
                                           const CaseWindow& window = {});

struct NonrampMatch {
  std::vector<ForecastCase> cases;  // deduplicated, sorted by init
  std::size_t candidates_before_dedup = 0;
};

/// Day -1 and day +1 at the same UTC time, accepted when scheduled, not itself a ramp case
/// and free of events. A candidate shared by two ramp cases is kept once, matched to the
/// earlier ramp case.
NonrampMatch match_nonramp_cases(std::span<const ForecastCase> ramp_cases, std::span<const Instant> inits,
                                 std::span<const RampEvent> events, const CaseWindow& window = {});

/// Every scheduled init exactly once, labelled ramp, nonramp (matched) or unlabeled.
struct CaseList {
  std::vector<ForecastCase> cases;
  std::size_t ramp = 0;
  std::size_t nonramp = 0;
  std::size_t nonramp_before_dedup = 0;
};
CaseList build_case_list(std::span<const Instant> inits, std::span<const RampEvent> events,
                         const CaseWindow& window = {});

// --- scores ----------------------------------------------------------------

/// Empirical-CDF CRPS: mean |x_i - y| - sum_ij |x_i - x_j| / (2 E^2).
double crps_ensemble(std::span<const double> members, double obs);

/// Observations and ensemble predictions on a (station, forecast, lead, member) grid.
/// NaN observations or predictions drop the (station, forecast, lead) sample.
struct ScoreData {
  std::vector<std::string> station_ids;
  std::vector<double> p95_kw;  // per station
  std::vector<Instant> init_times;
  std::vector<int> lead_minutes;
  std::size_t members = 0;
  std::vector<double> obs;   // [station][forecast][lead]
  std::vector<double> pred;  // [station][forecast][lead][member]

  ScoreData() = default;
  ScoreData(std::vector<std::string> stations, std::vector<double> p95, std::vector<Instant> inits,
            std::vector<int> leads, std::size_t members);

  std::size_t stations() const noexcept { return station_ids.size(); }
  std::size_t forecasts() const noexcept { return init_times.size(); }
  std::size_t leads() const noexcept { return lead_minutes.size(); }
  std::size_t obs_index(std::size_t s, std::size_t n, std::size_t l) const noexcept {
    return (s * forecasts() + n) * leads() + l;
  }
  double& observation(std::size_t s, std::size_t n, std::size_t l) { return obs[obs_index(s, n, l)]; }
  double* members_at(std::size_t s, std::size_t n, std::size_t l) { return &pred[obs_index(s, n, l) * members]; }
  const double* members_at(std::size_t s, std::size_t n, std::size_t l) const {
    return &pred[obs_index(s, n, l) * members];
  }

  /// Copies one forecast's station powers into row n (stations matched by id).
  void set_forecast(std::size_t n, const power::PowerForecast& fc);
};

enum class Metric { NRMSE, NMAE, NCRPS };
std::string to_string(Metric m);
inline constexpr Metric kMetrics[] = {Metric::NRMSE, Metric::NMAE, Metric::NCRPS};

/// One metric at every aggregation level. NaN where a station/lead has no sample.
struct MetricTable {
  Metric metric = Metric::NRMSE;
  std::vector<double> per_station_lead;  // [station][lead], averaged over forecasts
  std::vector<double> per_station;       // over forecasts and leads
  std::vector<double> per_lead;          // station-averaged (equal weights) per lead
  double overall = 0.0;                  // station-averaged per-station values
  std::vector<std::size_t> samples;      // [station][lead]
};

struct ScoreTable {
  std::string subset;
  std::vector<std::string> station_ids;
  std::vector<int> lead_minutes;
  std::size_t n_forecasts = 0;
  std::size_t members = 0;
  std::size_t n_stations = 0;  // stations with at least one sample
  MetricTable nrmse, nmae, ncrps;

  const MetricTable& get(Metric m) const;
};

/// Scores the given forecast rows (all rows when empty). nRMSE/nMAE use the ensemble mean.
/// Throws EmptyOverlap when no sample survives masking.
MetricTable nrmse(const ScoreData& data, std::span<const std::size_t> rows = {});
MetricTable nmae(const ScoreData& data, std::span<const std::size_t> rows = {});
MetricTable ncrps(const ScoreData& data, std::span<const std::size_t> rows = {});
ScoreTable score_table(const ScoreData& data, std::span<const std::size_t> rows, const std::string& subset);

/// (ramp - nonramp) / nonramp; throws ZeroDenominator when nonramp is 0.
double relative_difference(double ramp, double nonramp);

struct DegradationEntry {
  int lead_minutes = 0;
  Metric metric = Metric::NRMSE;
  double relative_difference = 0.0;  // NaN when flagged
  bool zero_denominator = false;
};

struct DegradationReport {
  std::vector<DegradationEntry> entries;  // lead-major, metrics in kMetrics order
  std::optional<double> at(int lead_minutes, Metric m) const;
};

/// Per lead and metric relative difference of the station-averaged scores. Leads with a
/// zero nonramp value are flagged instead of reported. Throws InvalidArgument when the
/// tables have different leads.
DegradationReport degradation(const ScoreTable& ramp, const ScoreTable& nonramp);

// --- exports ---------------------------------------------------------------

/// `subset,lead_minutes,metric,value,n_forecasts,n_stations`; lead "all" carries the
/// station-averaged value over every lead.
void write_scores_csv(std::ostream& out, std::span<const ScoreTable> tables, bool header = true);
/// `init_utc,label,matched_to`
void write_cases_csv(std::ostream& out, std::span<const ForecastCase> cases);
std::vector<ForecastCase> read_cases_csv(std::istream& in);
/// `lead_minutes,metric,relative_difference`; flagged entries leave the value empty.
void write_degradation_csv(std::ostream& out, const DegradationReport& report);

}  // namespace rampcast::verify
