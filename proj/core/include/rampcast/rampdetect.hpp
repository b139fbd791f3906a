#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rampcast/ingest.hpp"
#include "rampcast/time.hpp"

namespace rampcast::ramp {

/// Location whose sunrise/sunset bound "daytime" for domain-level statistics.
struct ReferencePoint {
  double lat = 46.8;
  double lon = 8.2;
};

/// National generation series: per-instant sum of valid station power.
struct AggregateSeries {
  std::vector<Instant> timestamps;
  std::vector<double> power_mw;
  std::vector<double> coverage;           // valid stations / all stations
  std::vector<std::uint8_t> low_coverage;  // 1 where coverage < min_coverage
  std::size_t n_stations = 0;

  std::size_t size() const noexcept { return timestamps.size(); }
  std::optional<std::size_t> index_of(Instant t) const noexcept;
};

/// Sums valid station power (kW -> MW) over the union of the station spans. Stations are
/// summed in id order with compensated summation, so input order never matters.
/// Throws CadenceMismatch when a series is not a regular 15-minute grid.
AggregateSeries aggregate_power(std::span<const ingest::StationSeries> stations, double min_coverage = 0.9);

/// Pairs (t, t+15 min) whose coverage differs by more than `max_coverage_change` are
/// treated as data dropouts and skipped.
struct PairFilter {
  bool enabled = true;
  double max_coverage_change = 0.05;
};

bool pair_usable(const AggregateSeries& agg, std::size_t i, const PairFilter& filter) noexcept;

/// Daytime bounds at a reference point with a per-date cache. Polar days count as fully
/// daytime and polar nights as fully night.
class DaylightCalendar {
 public:
  explicit DaylightCalendar(ReferencePoint ref) : ref_(ref) {}
  /// [sunrise, sunset]; empty optional during polar night.
  std::optional<std::pair<Instant, Instant>> bounds(CivilDate d) const;
  /// Interval [t, t + 15 min] overlaps [sunrise, sunset] of t's date.
  bool daytime_pair(Instant t) const;
  bool daytime(Instant t) const;
  ReferencePoint reference() const noexcept { return ref_; }

 private:
  ReferencePoint ref_;
  mutable std::map<int, std::optional<std::pair<Instant, Instant>>> cache_;
};

/// Mean CSI over all valid cells of all frames with timestamps in [sunrise, sunset].
/// Throws NoDaytimeFrames when nothing qualifies.
double mean_daytime_csi(std::span<const ingest::RasterField> frames, CivilDate day, ReferencePoint ref);
double mean_daytime_csi(const ingest::FieldSequence& seq, CivilDate day, ReferencePoint ref);

/// Daily means for every date that has at least one valid daytime cell.
std::map<CivilDate, double> daily_mean_csi(std::span<const ingest::RasterField> frames, ReferencePoint ref);

/// Dates whose mean strictly exceeds the nearest-rank percentile of all daily means.
/// Throws InsufficientDays for fewer than 10 days.
std::vector<CivilDate> select_clearsky_days(const std::map<CivilDate, double>& daily_means, double percentile = 90.0);

struct ThresholdProvenance {
  Instant argmax_instant{};
  std::size_t pairs_considered = 0;
  std::size_t pairs_excluded_coverage = 0;
  bool coverage_filter = true;
  ReferencePoint reference;
};

struct RampThreshold {
  double delta_p_tr_mw = 0.0;
  double rate_mw_per_min = 0.0;  // delta_p_tr_mw / 15
  double percentile = 90.0;
  std::vector<CivilDate> clearsky_days;
  ThresholdProvenance provenance;
};

/// Maximum |P(t + 15 min) - P(t)| over usable daytime pairs of the clear-sky days.
/// Throws NoValidPairs when no pair qualifies (a zero threshold is returned, not rejected).
RampThreshold derive_threshold(const AggregateSeries& agg, std::span<const CivilDate> clearsky_days,
                               ReferencePoint ref, const PairFilter& filter = {}, double percentile = 90.0);

enum class Direction { Up, Down };
std::string to_string(Direction d);
Direction parse_direction(const std::string& text);

struct RampEvent {
  Instant t_start{};
  Instant t_end{};
  double delta_p_mw = 0.0;
  Direction direction = Direction::Up;
  double normalized_magnitude = 0.0;  // |delta_p| / delta_p_tr
};

/// One event per usable consecutive pair with |dP| > delta_p_tr, in time order.
/// Throws InvalidThreshold unless delta_p_tr > 0.
std::vector<RampEvent> detect_ramps(const AggregateSeries& agg, const RampThreshold& thr,
                                    const PairFilter& filter = {});

/// Absolute exceedance (|dP| > thr, the detected set) vs signed (dP > thr) counts.
struct ExceedanceCounts {
  std::size_t absolute = 0;
  std::size_t signed_positive = 0;
};
ExceedanceCounts exceedance_counts(std::span<const RampEvent> events) noexcept;

struct DiurnalHistogram {
  std::array<std::size_t, 24> up{};
  std::array<std::size_t, 24> down{};
  std::size_t total() const noexcept;
};

/// Counts by UTC hour of t_start.
DiurnalHistogram diurnal_histogram(std::span<const RampEvent> events) noexcept;

enum class Season { MAM = 0, JJA = 1, SON = 2, DJF = 3 };
std::string to_string(Season s);
Season season_of(Instant t) noexcept;

struct HexBin {
  double x_center_hours = 0.0;
  double y_center = 0.0;
  std::size_t count = 0;
};

struct RidgePoint {
  int hour = 0;
  double y_center = 0.0;
};

struct HexbinConfig {
  double x_width_hours = 0.25;
  double y_width = 0.028;
};

/// Pointy-top hexagonal lattice (two interleaved rectangular lattices, as matplotlib's
/// hexbin) anchored at x = 00:00 UTC and y = 0.
struct HexbinDensity {
  Season season = Season::MAM;
  double x_width_hours = 0.25;
  double y_width = 0.028;
  double x_origin_hours = 0.0;
  std::vector<HexBin> bins;  // sorted by (x, y)
  std::vector<RidgePoint> ridge;
  std::size_t total() const noexcept;
};

/// Assigns one point (in lattice units) to its hexagon center (in lattice units).
std::pair<double, double> hex_center(double x_units, double y_units) noexcept;

/// Bins (hour of day of t, |dP| / delta_p_tr) for every usable daytime pair, per season.
std::array<HexbinDensity, 4> seasonal_hexbin(const AggregateSeries& agg, const RampThreshold& thr,
                                             ReferencePoint ref, const PairFilter& filter = {},
                                             const HexbinConfig& cfg = {});

}  // namespace rampcast::ramp
