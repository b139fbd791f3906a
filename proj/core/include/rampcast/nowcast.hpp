#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rampcast/ingest.hpp"

namespace rampcast::nowcast {

using ingest::FieldSequence;
using ingest::GridGeometry;
using ingest::RasterField;

/// Per-cell displacement in pixels per 15-minute step. u is along columns (eastward),
/// v along rows (southward, since row 0 is the northern edge).
struct MotionField {
  GridGeometry geometry;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> confidence;  // [0, 1]; 0 where no window resolved motion

  static MotionField uniform(const GridGeometry& g, double u, double v);
  double mean_u() const;
  double mean_v() const;
};

/// Pyramidal Lucas-Kanade settings. Windows are window x window pixels placed every
/// `stride` pixels (stride = window / 2 gives 50% overlap).
struct LucasKanadeConfig {
  int pyramid_levels = 3;
  int window = 16;
  int stride = 8;
  double eigen_floor = 1e-4;  // on the structure tensor summed over the window
  double max_displacement = 15.0;
  int max_iterations = 30;
  double tolerance = 1e-4;  // px, per-iteration update norm
  bool multi_pair = true;   // information-weighted over all consecutive pairs
  double idw_power = 2.0;
};

/// Sparse window estimate, exposed for diagnostics and tests.
struct WindowEstimate {
  double row = 0.0;
  double col = 0.0;
  double u = 0.0;
  double v = 0.0;
  double min_eigen = 0.0;
  bool valid = false;
};

/// Window-level estimates for one frame pair (prev -> next).
std::vector<WindowEstimate> lucas_kanade_windows(const RasterField& prev, const RasterField& next,
                                                 const LucasKanadeConfig& cfg = {});

/// Dense cloud-motion field from the sequence's consecutive frame pairs.
/// Throws TooFewFrames with fewer than 2 frames.
MotionField estimate_cmv(const FieldSequence& seq, const LucasKanadeConfig& cfg = {});

/// Backward semi-Lagrangian advection: output(x) = input(x - n_steps * V(x)), bilinear.
/// Origins outside the grid are masked; masked sources are skipped with weight
/// renormalization. Zero motion reproduces the input bit for bit.
RasterField advect(const RasterField& field, const MotionField& motion, int n_steps);

/// Members x leads grid of fields at valid times init + lead.
struct EnsembleForecast {
  Instant init_time{};
  std::vector<int> lead_minutes;
  ingest::FieldKind kind = ingest::FieldKind::CSI;
  std::vector<std::vector<RasterField>> members;  // [member][lead]
  std::string convention = "evolve_then_advect";

  std::size_t ensemble_size() const noexcept { return members.size(); }
  std::size_t leads() const noexcept { return lead_minutes.size(); }
  const RasterField& at(std::size_t member, std::size_t lead) const { return members.at(member).at(lead); }
};

std::vector<int> lead_minutes(int leads);

/// One member repeating the last frame at every lead.
EnsembleForecast persistence_forecast(const FieldSequence& seq, int leads = 8);

struct PerturbationConfig {
  double sigma_speed = 0.15;   // log-normal sigma of the member speed factor
  double sigma_dir_deg = 10.0;  // normal sigma of the member rotation
};

/// Advects the last frame with a member-specific speed factor and rotation applied to
/// the estimated motion. Deterministic in (inputs, seed). Uses the last 4 frames.
EnsembleForecast pure_advection_ensemble(const FieldSequence& seq, int members, int leads,
                                         const PerturbationConfig& perturb, std::uint64_t seed,
                                         const LucasKanadeConfig& lk = {}, double csi_cap = 1.6);
EnsembleForecast pure_advection_ensemble(const FieldSequence& seq, const MotionField& motion, int members,
                                         int leads, const PerturbationConfig& perturb, std::uint64_t seed,
                                         double csi_cap = 1.6);

// --- cascade ---------------------------------------------------------------

/// Gaussian band-pass filters in log wavenumber. Width is relative to the log spacing
/// of the central wavenumbers.
struct CascadeConfig {
  double relative_width = 0.35;
};

/// Spectral partition weights for one grid shape; weights sum to 1 at every frequency.
class CascadeFilter {
 public:
  CascadeFilter(std::size_t rows, std::size_t cols, std::size_t levels, const CascadeConfig& cfg = {});

  std::size_t levels() const noexcept { return levels_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  /// Central radial wavenumbers (cycles per domain of the longer side).
  const std::vector<double>& central_wavenumbers() const noexcept { return centers_; }
  /// Weights over the half spectrum, rows x (cols / 2 + 1), level-major.
  const std::vector<std::vector<double>>& weights() const noexcept { return weights_; }
  /// Radial wavenumber of half-spectrum bin (i, j).
  double radial_wavenumber(std::size_t i, std::size_t j) const noexcept;

  /// Raw (unstandardized) level fields; their sum reproduces the input.
  std::vector<std::vector<double>> bandpass(std::span<const double> values) const;

 private:
  std::size_t rows_, cols_, levels_;
  std::vector<double> centers_;
  std::vector<std::vector<double>> weights_;
};

struct CascadeDecomposition {
  GridGeometry geometry;
  std::size_t n_levels = 0;
  std::vector<std::vector<double>> level_fields;    // standardized, level 0 coarsest
  std::vector<std::vector<double>> filter_weights;  // half-spectrum weights per level
  std::vector<double> central_wavenumbers;
  std::vector<double> level_mean;
  std::vector<double> level_std;
  std::vector<std::uint8_t> mask;  // input validity; masked cells were mean-filled

  std::vector<double> denormalized(std::size_t level) const;
  std::vector<double> reconstruct() const;
};

/// Throws TooManyLevels unless 2 <= levels and both dimensions >= 2^levels.
CascadeDecomposition cascade_decompose(const RasterField& field, std::size_t levels, const CascadeConfig& cfg = {});

// --- AR(2) -----------------------------------------------------------------

struct AR2Coefficients {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double noise_std = 1.0;
  bool stationary() const noexcept;
};

struct ARParams {
  std::vector<double> phi1;
  std::vector<double> phi2;
  std::vector<double> noise_std;
  std::size_t levels() const noexcept { return phi1.size(); }
  AR2Coefficients level(std::size_t k) const { return {phi1.at(k), phi2.at(k), noise_std.at(k)}; }
};

/// Pooled sample autocorrelation at lags 1 and 2 over a [frame][cell] series.
std::pair<double, double> lag_autocorrelations(const std::vector<std::vector<double>>& frames);

/// Yule-Walker AR(2) from lag correlations, projected into the stationarity triangle.
/// Throws DegenerateAutocorrelation when |r1| >= 1.
AR2Coefficients ar2_from_correlations(double r1, double r2);

/// level_series[level][frame][cell]; at least 3 frames per level.
ARParams fit_ar2(const std::vector<std::vector<std::vector<double>>>& level_series);

// --- noise -----------------------------------------------------------------

/// White Gaussian noise shaped by the radially averaged power spectrum of a reference.
class NoiseGenerator {
 public:
  /// Throws InsufficientReference when fewer than half the reference cells are valid.
  explicit NoiseGenerator(const RasterField& reference);

  /// Standardized (mean 0, std 1) noise field values.
  std::vector<double> generate(std::uint64_t seed) const;
  /// Spectrum of shaped noise before the inverse transform (half spectrum, unnormalized).
  std::vector<std::complex<double>> shaped_spectrum(std::uint64_t seed) const;
  /// Filter amplitude per integer radial bin.
  const std::vector<double>& radial_amplitude() const noexcept { return amplitude_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

 private:
  std::size_t rows_, cols_;
  std::vector<double> amplitude_;
  std::vector<double> bin_filter_;  // half-spectrum filter
};

RasterField correlated_noise(const GridGeometry& geometry, const RasterField& reference, std::uint64_t seed);

/// Radially averaged periodogram, one entry per integer radial bin (for diagnostics).
std::vector<double> radial_power_spectrum(std::span<const double> values, std::size_t rows, std::size_t cols);

// --- cascade AR ensemble ---------------------------------------------------

struct StepsConfig {
  std::size_t levels = 6;
  bool noise = true;
  std::optional<AR2Coefficients> forced_ar;  // overrides every level
  CascadeConfig cascade;
  LucasKanadeConfig lk;
  double csi_cap = 1.6;
};

/// Fitted state shared by all members of one initialization.
struct StepsModel {
  MotionField motion;
  ARParams ar;
  std::vector<double> last_mean, last_std;
};

EnsembleForecast steps_forecast(const FieldSequence& seq, int members, int leads, std::uint64_t seed,
                                const StepsConfig& cfg = {});
EnsembleForecast steps_forecast(const FieldSequence& seq, const MotionField& motion, int members, int leads,
                                std::uint64_t seed, const StepsConfig& cfg = {}, StepsModel* fitted = nullptr);

}  // namespace rampcast::nowcast
