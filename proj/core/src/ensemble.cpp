#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fft.hpp"
#include "rampcast/error.hpp"
#include "rampcast/nowcast.hpp"
#include "rampcast/parallel.hpp"

namespace rampcast::nowcast {

namespace {

void check_sizes(int members, int leads) {
  if (members < 1) fail(Errc::InvalidArgument, "ensemble size must be >= 1");
  if (leads < 1) fail(Errc::InvalidArgument, "lead count must be >= 1");
}

FieldSequence last_four(const FieldSequence& seq) {
  if (seq.size() < 4) fail(Errc::TooFewFrames, "nowcasting needs 4 input frames, got " + std::to_string(seq.size()));
  return seq.size() == 4 ? seq : seq.tail(4);
}

Instant valid_time(Instant init, int lead) { return init + lead * kStep; }

void clip_field(std::vector<double>& v, ingest::FieldKind kind, double cap) {
  for (double& x : v) {
    if (!std::isfinite(x)) continue;
    x = kind == ingest::FieldKind::CSI ? std::clamp(x, 0.0, cap) : std::max(x, 0.0);
  }
}

EnsembleForecast empty_forecast(const RasterField& last, int members, int leads) {
  EnsembleForecast fc;
  fc.init_time = last.timestamp();
  fc.kind = last.kind();
  fc.lead_minutes = lead_minutes(leads);
  fc.members.assign(std::size_t(members), std::vector<RasterField>(std::size_t(leads)));
  return fc;
}

std::pair<double, double> standardize(std::vector<double>& v) {
  CompensatedSum s;
  for (double x : v) s += x;
  const double m = v.empty() ? 0.0 : s.value() / double(v.size());
  CompensatedSum q;
  for (double x : v) q += (x - m) * (x - m);
  double sd = v.empty() ? 0.0 : std::sqrt(q.value() / double(v.size()));
  if (!(sd > 1e-12)) sd = 0.0;
  for (double& x : v) x = sd > 0.0 ? (x - m) / sd : 0.0;
  return {m, sd};
}

}  // namespace

std::vector<int> lead_minutes(int leads) {
  std::vector<int> out(std::size_t(std::max(leads, 0)));
  for (int l = 1; l <= leads; ++l) out[std::size_t(l - 1)] = 15 * l;
  return out;
}

EnsembleForecast persistence_forecast(const FieldSequence& seq, int leads) {
  check_sizes(1, leads);
  if (seq.empty()) fail(Errc::TooFewFrames, "persistence needs at least one frame");
  const RasterField& last = seq.back();
  EnsembleForecast fc = empty_forecast(last, 1, leads);
  fc.convention = "persistence";
  for (int l = 1; l <= leads; ++l) {
    RasterField f = last;
    f.set_timestamp(valid_time(last.timestamp(), l));
    fc.members[0][std::size_t(l - 1)] = std::move(f);
  }
  return fc;
}

EnsembleForecast pure_advection_ensemble(const FieldSequence& seq, int members, int leads,
                                         const PerturbationConfig& perturb, std::uint64_t seed,
                                         const LucasKanadeConfig& lk, double csi_cap) {
  const FieldSequence four = last_four(seq);
  return pure_advection_ensemble(four, estimate_cmv(four, lk), members, leads, perturb, seed, csi_cap);
}

EnsembleForecast pure_advection_ensemble(const FieldSequence& seq, const MotionField& motion, int members,
                                         int leads, const PerturbationConfig& perturb, std::uint64_t seed,
                                         double csi_cap) {
  check_sizes(members, leads);
  if (!(perturb.sigma_speed >= 0.0) || !(perturb.sigma_dir_deg >= 0.0))
    fail(Errc::InvalidArgument, "perturbation sigmas must be >= 0");
  const FieldSequence four = last_four(seq);
  const RasterField& last = four.back();
  EnsembleForecast fc = empty_forecast(last, members, leads);
  fc.convention = "advect";

  parallel_for(std::size_t(members), [&](std::size_t m) {
    std::mt19937_64 rng(mix_seed(seed, m + 1));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double speed = std::exp(perturb.sigma_speed * normal(rng));
    const double theta = perturb.sigma_dir_deg * normal(rng) * std::numbers::pi / 180.0;
    const double ct = std::cos(theta), st = std::sin(theta);
    MotionField mm = motion;
    for (std::size_t i = 0; i < mm.u.size(); ++i) {
      mm.u[i] = speed * (motion.u[i] * ct - motion.v[i] * st);
      mm.v[i] = speed * (motion.u[i] * st + motion.v[i] * ct);
    }
    for (int l = 1; l <= leads; ++l) {
      RasterField f = advect(last, mm, l);
      std::vector<double> v(f.values().begin(), f.values().end());
      clip_field(v, f.kind(), csi_cap);
      f = RasterField(f.geometry(), valid_time(last.timestamp(), l), f.kind(), std::move(v));
      fc.members[m][std::size_t(l - 1)] = std::move(f);
    }
  });
  return fc;
}

EnsembleForecast steps_forecast(const FieldSequence& seq, int members, int leads, std::uint64_t seed,
                                const StepsConfig& cfg) {
  const FieldSequence four = last_four(seq);
  return steps_forecast(four, estimate_cmv(four, cfg.lk), members, leads, seed, cfg);
}

EnsembleForecast steps_forecast(const FieldSequence& seq, const MotionField& motion, int members, int leads,
                                std::uint64_t seed, const StepsConfig& cfg, StepsModel* fitted) {
  check_sizes(members, leads);
  const FieldSequence four = last_four(seq);
  const RasterField& last = four.back();
  const GridGeometry& geo = last.geometry();
  const std::size_t levels = cfg.levels;
  const CascadeFilter filter(geo.nrows, geo.ncols, levels, cfg.cascade);

  // Lagrangian history: every frame moved forward to the last frame's time.
  std::vector<std::vector<std::vector<double>>> z(levels, std::vector<std::vector<double>>(4));
  std::vector<double> last_mean(levels), last_std(levels);
  for (std::size_t f = 0; f < 4; ++f) {
    const RasterField moved = advect(four[f], motion, int(3 - f));
    auto bands = filter.bandpass(moved.filled_values());
    for (std::size_t k = 0; k < levels; ++k) {
      const auto [m, sd] = standardize(bands[k]);
      if (f == 3) {
        last_mean[k] = m;
        last_std[k] = sd;
      }
      z[k][f] = std::move(bands[k]);
    }
  }

  ARParams ar;
  for (std::size_t k = 0; k < levels; ++k) {
    AR2Coefficients a{1.0, 0.0, 0.0};
    if (cfg.forced_ar) {
      a = *cfg.forced_ar;
    } else {
      try {
        const auto [r1, r2] = lag_autocorrelations(z[k]);
        a = ar2_from_correlations(r1, r2);
      } catch (const Error& e) {
        // A level without variance or with perfect lag-1 correlation is carried unchanged.
        if (e.code() != Errc::DegenerateAutocorrelation) throw;
      }
    }
    ar.phi1.push_back(a.phi1);
    ar.phi2.push_back(a.phi2);
    ar.noise_std.push_back(a.noise_std);
  }
  if (fitted) *fitted = {motion, ar, last_mean, last_std};

  std::optional<NoiseGenerator> noise;
  if (cfg.noise) noise.emplace(last);
  const auto& fft = detail::Fft2d::get(geo.nrows, geo.ncols);
  const std::vector<std::uint8_t> last_mask(last.mask().begin(), last.mask().end());

  EnsembleForecast fc = empty_forecast(last, members, leads);
  fc.convention = "evolve_then_advect";
  parallel_for(std::size_t(members), [&](std::size_t m) {
    std::vector<std::vector<double>> prev(levels), cur(levels);
    for (std::size_t k = 0; k < levels; ++k) {
      prev[k] = z[k][2];
      cur[k] = z[k][3];
    }
    std::vector<std::complex<double>> band;
    for (int l = 1; l <= leads; ++l) {
      std::vector<std::vector<double>> eps;
      if (noise) {
        const auto spec = noise->shaped_spectrum(mix_seed(seed, m + 1, std::uint64_t(l)));
        band.resize(spec.size());
        eps.resize(levels);
        for (std::size_t k = 0; k < levels; ++k) {
          for (std::size_t i = 0; i < spec.size(); ++i) band[i] = spec[i] * filter.weights()[k][i];
          eps[k] = fft.inverse(band);
          standardize(eps[k]);
        }
      }
      std::vector<double> values(geo.size(), 0.0);
      for (std::size_t k = 0; k < levels; ++k) {
        const double p1 = ar.phi1[k], p2 = ar.phi2[k], sn = ar.noise_std[k];
        for (std::size_t i = 0; i < values.size(); ++i) {
          double next = p1 * cur[k][i] + p2 * prev[k][i];
          if (noise) next += sn * eps[k][i];
          prev[k][i] = cur[k][i];
          cur[k][i] = next;
          values[i] += last_std[k] * next + last_mean[k];
        }
      }
      clip_field(values, last.kind(), cfg.csi_cap);
      const RasterField evolved(geo, valid_time(last.timestamp(), l), last.kind(), std::move(values), last_mask);
      fc.members[m][std::size_t(l - 1)] = advect(evolved, motion, l);
    }
  });
  return fc;
}

}  // namespace rampcast::nowcast
