#include <algorithm>
#include <cmath>
#include <random>

#include "fft.hpp"
#include "rampcast/error.hpp"
#include "rampcast/nowcast.hpp"
#include "rampcast/parallel.hpp"

namespace rampcast::nowcast {

using detail::Fft2d;

namespace {

double mean_of(std::span<const double> v) {
  CompensatedSum s;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s.value() / double(v.size());
}

double std_of(std::span<const double> v, double mean) {
  CompensatedSum s;
  for (double x : v) s += (x - mean) * (x - mean);
  return v.empty() ? 0.0 : std::sqrt(s.value() / double(v.size()));
}

// Radial wavenumber in cycles per domain of the longer side.
double radial(std::size_t rows, std::size_t cols, double fy, double fx) {
  const double l = double(std::max(rows, cols));
  const double ky = fy * l / double(rows), kx = fx * l / double(cols);
  return std::sqrt(ky * ky + kx * kx);
}

}  // namespace

// --- filters ---------------------------------------------------------------

CascadeFilter::CascadeFilter(std::size_t rows, std::size_t cols, std::size_t levels, const CascadeConfig& cfg)
    : rows_(rows), cols_(cols), levels_(levels) {
  if (levels < 2) fail(Errc::TooManyLevels, "cascade needs at least 2 levels");
  if (levels >= 63 || std::min(rows, cols) < (std::size_t{1} << levels))
    fail(Errc::TooManyLevels, std::to_string(levels) + " levels do not fit a " + std::to_string(rows) + "x" +
                                  std::to_string(cols) + " grid");
  if (!(cfg.relative_width > 0.0)) fail(Errc::InvalidArgument, "cascade filter width must be positive");

  const double l = double(std::max(rows, cols));
  const double q = std::pow(0.5 * l, 1.0 / double(levels));
  const double s = cfg.relative_width * std::log(q);
  std::vector<double> log_centers(levels);
  centers_.resize(levels);
  for (std::size_t k = 0; k < levels; ++k) {
    centers_[k] = 0.5 * (std::pow(q, double(k)) + std::pow(q, double(k + 1)));
    log_centers[k] = std::log(centers_[k]);
  }

  const std::size_t hc = cols / 2 + 1;
  weights_.assign(levels, std::vector<double>(rows * hc, 0.0));
  const Fft2d& fft = Fft2d::get(rows, cols);
  std::vector<double> expo(levels);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < hc; ++j) {
      const std::size_t idx = i * hc + j;
      const double r = radial(rows, cols, fft.row_frequency(i), double(j));
      if (r == 0.0) {
        weights_[0][idx] = 1.0;
        continue;
      }
      // Shift exponents by their maximum so the normalization never underflows.
      const double lr = std::log(r);
      double top = -INFINITY;
      for (std::size_t k = 0; k < levels; ++k) {
        expo[k] = -(lr - log_centers[k]) * (lr - log_centers[k]) / (2.0 * s * s);
        top = std::max(top, expo[k]);
      }
      double sum = 0.0;
      for (std::size_t k = 0; k < levels; ++k) {
        expo[k] = std::exp(expo[k] - top);
        sum += expo[k];
      }
      for (std::size_t k = 0; k < levels; ++k) weights_[k][idx] = expo[k] / sum;
    }
}

double CascadeFilter::radial_wavenumber(std::size_t i, std::size_t j) const noexcept {
  const double fy = i <= rows_ / 2 ? double(i) : double(i) - double(rows_);
  return radial(rows_, cols_, fy, double(j));
}

std::vector<std::vector<double>> CascadeFilter::bandpass(std::span<const double> values) const {
  const Fft2d& fft = Fft2d::get(rows_, cols_);
  const auto spectrum = fft.forward(values);
  std::vector<std::vector<double>> out(levels_);
  std::vector<std::complex<double>> band(spectrum.size());
  for (std::size_t k = 0; k < levels_; ++k) {
    for (std::size_t i = 0; i < spectrum.size(); ++i) band[i] = spectrum[i] * weights_[k][i];
    out[k] = fft.inverse(band);
  }
  return out;
}

// --- decomposition ---------------------------------------------------------

std::vector<double> CascadeDecomposition::denormalized(std::size_t level) const {
  const auto& z = level_fields.at(level);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = level_std[level] * z[i] + level_mean[level];
  return out;
}

std::vector<double> CascadeDecomposition::reconstruct() const {
  std::vector<double> out(geometry.size(), 0.0);
  for (std::size_t k = 0; k < n_levels; ++k)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += level_std[k] * level_fields[k][i] + level_mean[k];
  return out;
}

CascadeDecomposition cascade_decompose(const RasterField& field, std::size_t levels, const CascadeConfig& cfg) {
  const CascadeFilter filter(field.rows(), field.cols(), levels, cfg);
  CascadeDecomposition d;
  d.geometry = field.geometry();
  d.n_levels = levels;
  d.filter_weights = filter.weights();
  d.central_wavenumbers = filter.central_wavenumbers();
  d.mask.assign(field.mask().begin(), field.mask().end());
  d.level_fields = filter.bandpass(field.filled_values());
  d.level_mean.resize(levels);
  d.level_std.resize(levels);
  for (std::size_t k = 0; k < levels; ++k) {
    auto& lv = d.level_fields[k];
    const double m = mean_of(lv);
    double sd = std_of(lv, m);
    if (!(sd > 1e-12)) sd = 0.0;
    for (double& x : lv) x = sd > 0.0 ? (x - m) / sd : 0.0;
    d.level_mean[k] = m;
    d.level_std[k] = sd;
  }
  return d;
}

// --- AR(2) -----------------------------------------------------------------

bool AR2Coefficients::stationary() const noexcept {
  return std::fabs(phi2) < 1.0 && phi1 + phi2 < 1.0 && phi2 - phi1 < 1.0;
}

std::pair<double, double> lag_autocorrelations(const std::vector<std::vector<double>>& frames) {
  if (frames.size() < 3) fail(Errc::TooFewFrames, "lag-2 autocorrelation needs at least 3 frames");
  const std::size_t n = frames.front().size();
  for (const auto& f : frames)
    if (f.size() != n || n == 0) fail(Errc::GeometryMismatch, "autocorrelation frames differ in size");
  CompensatedSum total;
  for (const auto& f : frames)
    for (double x : f) total += x;
  const double mu = total.value() / double(n * frames.size());
  CompensatedSum var;
  for (const auto& f : frames)
    for (double x : f) var += (x - mu) * (x - mu);
  const double c0 = var.value() / double(n * frames.size());
  if (!(c0 > 0.0)) fail(Errc::DegenerateAutocorrelation, "series has zero variance");
  auto lag = [&](std::size_t h) {
    CompensatedSum s;
    for (std::size_t t = h; t < frames.size(); ++t)
      for (std::size_t i = 0; i < n; ++i) s += (frames[t][i] - mu) * (frames[t - h][i] - mu);
    return s.value() / double(n * (frames.size() - h)) / c0;
  };
  return {lag(1), lag(2)};
}

AR2Coefficients ar2_from_correlations(double r1, double r2) {
  if (!std::isfinite(r1) || !std::isfinite(r2) || std::fabs(r1) >= 1.0)
    fail(Errc::DegenerateAutocorrelation, "lag-1 autocorrelation must lie in (-1, 1), got " + std::to_string(r1));
  // Positive definiteness of the lag correlation matrix.
  r2 = std::clamp(r2, 2.0 * r1 * r1 - 1.0, 1.0);
  const double den = 1.0 - r1 * r1;
  AR2Coefficients a;
  a.phi1 = r1 * (1.0 - r2) / den;
  a.phi2 = (r2 - r1 * r1) / den;
  constexpr double margin = 1e-6;
  a.phi2 = std::clamp(a.phi2, -1.0 + margin, 1.0 - margin);
  a.phi1 = std::clamp(a.phi1, a.phi2 - 1.0 + margin, 1.0 - a.phi2 - margin);
  a.noise_std = std::sqrt(std::clamp(1.0 - a.phi1 * r1 - a.phi2 * r2, 0.0, 1.0));
  return a;
}

ARParams fit_ar2(const std::vector<std::vector<std::vector<double>>>& level_series) {
  ARParams p;
  for (const auto& frames : level_series) {
    const auto [r1, r2] = lag_autocorrelations(frames);
    const AR2Coefficients a = ar2_from_correlations(r1, r2);
    p.phi1.push_back(a.phi1);
    p.phi2.push_back(a.phi2);
    p.noise_std.push_back(a.noise_std);
  }
  return p;
}

// --- noise -----------------------------------------------------------------

namespace {

std::size_t radial_bin(std::size_t rows, std::size_t cols, std::size_t i, std::size_t j) {
  const double fy = i <= rows / 2 ? double(i) : double(i) - double(rows);
  return std::size_t(std::lround(radial(rows, cols, fy, double(j))));
}

std::vector<double> binned_power(std::span<const std::complex<double>> spec, std::size_t rows, std::size_t cols) {
  const std::size_t hc = cols / 2 + 1;
  std::vector<double> sum, count;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < hc; ++j) {
      const std::size_t b = radial_bin(rows, cols, i, j);
      if (b >= sum.size()) {
        sum.resize(b + 1, 0.0);
        count.resize(b + 1, 0.0);
      }
      // Interior columns also stand for their conjugate mirror.
      const double w = (j == 0 || 2 * j == cols) ? 1.0 : 2.0;
      sum[b] += w * std::norm(spec[i * hc + j]);
      count[b] += w;
    }
  for (std::size_t b = 0; b < sum.size(); ++b) sum[b] = count[b] > 0 ? sum[b] / count[b] : 0.0;
  return sum;
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

}  // namespace

std::vector<double> radial_power_spectrum(std::span<const double> values, std::size_t rows, std::size_t cols) {
  if (values.size() != rows * cols) fail(Errc::InvalidArgument, "spectrum input size mismatch");
  return binned_power(Fft2d::get(rows, cols).forward(values), rows, cols);
}

NoiseGenerator::NoiseGenerator(const RasterField& reference) : rows_(reference.rows()), cols_(reference.cols()) {
  if (reference.size() == 0 || 2 * reference.valid_count() < reference.size())
    fail(Errc::InsufficientReference, "noise reference has fewer than 50% valid cells");
  auto filled = reference.filled_values();
  const double m = mean_of(filled);
  for (double& x : filled) x -= m;
  const Fft2d& fft = Fft2d::get(rows_, cols_);
  const auto power = binned_power(fft.forward(filled), rows_, cols_);
  amplitude_.resize(power.size());
  bool flat = true;
  for (std::size_t b = 1; b < power.size(); ++b) {
    amplitude_[b] = std::sqrt(power[b]);
    if (amplitude_[b] > 0.0) flat = false;
  }
  // A constant reference carries no spatial structure: fall back to white noise.
  if (flat)
    for (std::size_t b = 1; b < amplitude_.size(); ++b) amplitude_[b] = 1.0;
  if (!amplitude_.empty()) amplitude_[0] = 0.0;

  const std::size_t hc = cols_ / 2 + 1;
  bin_filter_.resize(rows_ * hc);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < hc; ++j) bin_filter_[i * hc + j] = amplitude_[radial_bin(rows_, cols_, i, j)];
}

std::vector<std::complex<double>> NoiseGenerator::shaped_spectrum(std::uint64_t seed) const {
  auto spec = Fft2d::get(rows_, cols_).forward(white_noise(rows_ * cols_, seed));
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= bin_filter_[i];
  return spec;
}

std::vector<double> NoiseGenerator::generate(std::uint64_t seed) const {
  auto v = Fft2d::get(rows_, cols_).inverse(shaped_spectrum(seed));
  const double m = mean_of(v);
  const double sd = std_of(v, m);
  for (double& x : v) x = sd > 0.0 ? (x - m) / sd : 0.0;
  return v;
}

RasterField correlated_noise(const GridGeometry& geometry, const RasterField& reference, std::uint64_t seed) {
  if (geometry.nrows != reference.rows() || geometry.ncols != reference.cols())
    fail(Errc::GeometryMismatch, "noise geometry differs from the reference");
  const NoiseGenerator gen(reference);
  return RasterField(geometry, reference.timestamp(), reference.kind(), gen.generate(seed));
}

}  // namespace rampcast::nowcast
