#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rampcast/ingest.hpp"
#include "rampcast/pipeline/config.hpp"
#include "rampcast/rampdetect.hpp"

namespace rampcast::pipeline {

struct Blob {
  double row = 0.0;  // position at 00:00 UTC of the day, px
  double col = 0.0;
  double sigma = 1.0;
  double depth = 0.0;
};

/// Scene dynamics of one UTC day.
struct DayPlan {
  CivilDate date{};
  SceneKind kind = SceneKind::ClearSky;
  double u = 0.0;  // px per step
  double v = 0.0;
  std::vector<Blob> blobs;
  /// Advection: the front edge crosses the fleet center. Dissipation/fog: optical depth
  /// falls through 1, after which it halves every halving_minutes.
  std::optional<Instant> onset;
  Instant window_begin{};  // planted window (inclusive), empty when no onset
  Instant window_end{};
  ramp::Direction direction = ramp::Direction::Up;
  // dropout block: stations silent in [dropout_begin, dropout_end)
  std::vector<std::size_t> dropout_stations;
  Instant dropout_begin{};
  Instant dropout_end{};
};

struct SyntheticStation {
  ingest::StationMeta meta;
  double row = 0.0;
  double col = 0.0;
  double capacity_kw = 0.0;
};

/// Deterministic CSI scene model. csi(row, col, t) is defined for continuous pixel
/// coordinates so stations and grid cells sample the same scene.
class SceneModel {
 public:
  SceneModel(const SyntheticScenario& scenario, const solargeo::ClearSkyConfig& clearsky, ramp::ReferencePoint ref);

  const SyntheticScenario& scenario() const noexcept { return sc_; }
  const std::vector<DayPlan>& days() const noexcept { return days_; }
  const std::vector<SyntheticStation>& stations() const noexcept { return stations_; }
  const DayPlan* day(CivilDate d) const;

  double csi(double row, double col, Instant t) const;
  ingest::RasterField csi_field(Instant t) const;
  /// CSI x Ineichen clear-sky on the grid.
  ingest::RasterField ssi_field(Instant t) const;

  /// Noise-free generator output: g = c_s * SSI[kW m-2] * max(0, cos sza)^0.1, in kW.
  double clean_power_kw(std::size_t station, Instant t) const;
  /// Timestamps stored in the raster archive for the day (reference sun up, 30 min margin).
  std::vector<Instant> frame_times(CivilDate d) const;

 private:
  SyntheticScenario sc_;
  solargeo::ClearSkyConfig clearsky_;
  ramp::ReferencePoint ref_;
  std::vector<DayPlan> days_;
  std::vector<SyntheticStation> stations_;
  double center_row_ = 0.0, center_col_ = 0.0;
};

/// Station series with noise, quantization to 1/8 kW and the planned dropouts.
std::vector<ingest::StationSeries> synthesize_fleet(const SceneModel& scene);

/// Writes the raster archive, station CSV and truth sidecar for cfg.synthetic.
/// Throws InvalidScenario.
void generate_synthetic(const PipelineConfig& cfg);

}  // namespace rampcast::pipeline
