#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "oracles/oracles.hpp"
#include "rampcast/nowcast.hpp"
#include "support/testing.hpp"

namespace rampcast::nowcast {
namespace {

using rampcast::test::at;
using rampcast::test::square_grid;

ingest::RasterField white_field(std::size_t n, std::uint64_t seed, double mean = 0.6, double sd = 0.2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(mean, sd);
  return test::sample_field(square_grid(n), at("2021-06-01T10:00:00Z"), ingest::FieldKind::CSI,
                            [&](double, double) { return d(rng); });
}

double variance(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size());
}

TEST(Cascade, WeightsPartitionUnity) {
  const CascadeFilter f(32, 48, 4);
  for (std::size_t i = 0; i < f.weights()[0].size(); ++i) {
    double s = 0.0;
    for (const auto& w : f.weights()) s += w[i];
    ASSERT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Cascade, ReconstructsRandomFields) {
  for (std::size_t levels = 2; levels <= 6; ++levels) {
    const auto f = white_field(64, levels);
    const auto d = cascade_decompose(f, levels);
    const auto back = d.reconstruct();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < back.size(); ++i) {
      num += (back[i] - f.value(i)) * (back[i] - f.value(i));
      den += f.value(i) * f.value(i);
    }
    EXPECT_LT(std::sqrt(num / den), 1e-6) << levels;
    for (std::size_t k = 0; k < levels; ++k) {
      double s = 0.0;
      for (double x : d.level_fields[k]) s += x;
      EXPECT_NEAR(s / double(back.size()), 0.0, 1e-9);
      EXPECT_NEAR(variance(d.level_fields[k]), 1.0, 1e-9);
    }
  }
}

TEST(Cascade, SumOfDenormalizedLevelsEqualsReconstruct) {
  const auto d = cascade_decompose(white_field(32, 9), 4);
  const auto full = d.reconstruct();
  std::vector<double> sum(full.size(), 0.0);
  for (std::size_t k = 0; k < d.n_levels; ++k) {
    const auto lv = d.denormalized(k);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += lv[i];
  }
  for (std::size_t i = 0; i < sum.size(); ++i) ASSERT_NEAR(sum[i], full[i], 1e-12);
}

TEST(Cascade, ConstantFieldLivesInCoarsestLevel) {
  const auto f = test::sample_field(square_grid(32), at("2021-06-01T10:00:00Z"), ingest::FieldKind::CSI,
                                    [](double, double) { return 0.8; });
  const CascadeFilter filter(32, 32, 4);
  const auto bands = filter.bandpass(f.values());
  for (double x : bands[0]) ASSERT_NEAR(x, 0.8, 1e-12);
  for (std::size_t k = 1; k < bands.size(); ++k) EXPECT_LT(std::sqrt(variance(bands[k])), 1e-9);
  for (std::size_t k = 1; k < bands.size(); ++k)
    for (double x : bands[k]) ASSERT_NEAR(x, 0.0, 1e-12);
}

TEST(Cascade, SinusoidAtCentralWavenumberConcentrates) {
  // 128 px and 6 levels put the central wavenumbers at 1.5, 3, 6, 12, 24, 48.
  const CascadeFilter filter(128, 128, 6);
  for (std::size_t k = 1; k < 6; ++k) {
    const double wn = filter.central_wavenumbers()[k];
    ASSERT_EQ(wn, 3.0 * double(1u << (k - 1)));
    const auto f = test::sample_field(square_grid(128), at("2021-06-01T10:00:00Z"), ingest::FieldKind::CSI,
                                      [&](double, double c) { return std::sin(2.0 * std::numbers::pi * wn * c / 128.0); });
    const auto bands = filter.bandpass(f.values());
    double total = 0.0;
    std::vector<double> power(bands.size());
    for (std::size_t j = 0; j < bands.size(); ++j) {
      power[j] = variance(bands[j]);
      total += power[j];
    }
    EXPECT_GE(power[k] / total, 0.9) << "level " << k;
  }
}

TEST(Cascade, TooManyLevelsRejected) {
  EXPECT_RAMPCAST_ERROR(CascadeFilter(32, 32, 6), Errc::TooManyLevels);
  EXPECT_RAMPCAST_ERROR(CascadeFilter(32, 64, 6), Errc::TooManyLevels);
  EXPECT_RAMPCAST_ERROR(CascadeFilter(32, 32, 1), Errc::TooManyLevels);
  EXPECT_NO_THROW(CascadeFilter(32, 32, 5));
}

TEST(Cascade, MaskedCellsAreMeanFilled) {
  auto f = white_field(32, 12);
  f.invalidate(3);
  f.invalidate(40);
  const auto d = cascade_decompose(f, 3);
  EXPECT_EQ(d.mask[3], 0);
  EXPECT_EQ(d.mask[4], 1);
  const auto back = d.reconstruct();
  const auto filled = f.filled_values();
  for (std::size_t i = 0; i < back.size(); ++i) ASSERT_NEAR(back[i], filled[i], 1e-9);
  EXPECT_NEAR(filled[3], f.valid_mean(), 1e-12);
}

// --- AR(2) -----------------------------------------------------------------

TEST(Ar2, PersistentAr1CorrelationsGiveUnitPhi1) {
  const double r1 = 1.0 - 1e-6;
  const auto a = ar2_from_correlations(r1, r1 * r1);
  EXPECT_NEAR(a.phi1, 1.0, 1e-5);
  EXPECT_NEAR(a.phi2, 0.0, 1e-5);
  EXPECT_LT(a.noise_std, 2e-3);
  EXPECT_TRUE(a.stationary());
}

TEST(Ar2, EqualNearUnitCorrelationsSplitAcrossLags) {
  // With r1 = r2 the Yule-Walker solution divides persistence between both lags.
  const double r = 1.0 - 1e-6;
  const auto a = ar2_from_correlations(r, r);
  EXPECT_NEAR(a.phi1 + a.phi2, 1.0, 1e-5);
  EXPECT_NEAR(a.phi1, 0.5, 1e-3);
  EXPECT_LT(a.noise_std, 2e-3);
  EXPECT_TRUE(a.stationary());
}

TEST(Ar2, KnownCorrelationsInvert) {
  // AR(2) with phi = (0.6, 0.2): r1 = phi1 / (1 - phi2), r2 = phi1 r1 + phi2.
  const double r1 = 0.6 / 0.8, r2 = 0.6 * r1 + 0.2;
  const auto a = ar2_from_correlations(r1, r2);
  EXPECT_NEAR(a.phi1, 0.6, 1e-12);
  EXPECT_NEAR(a.phi2, 0.2, 1e-12);
  EXPECT_NEAR(a.noise_std * a.noise_std, 1.0 - 0.6 * r1 - 0.2 * r2, 1e-12);
}

TEST(Ar2, AlwaysStationary) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.999, 0.999), w(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const auto a = ar2_from_correlations(u(rng), w(rng));
    ASSERT_TRUE(a.stationary()) << a.phi1 << ' ' << a.phi2;
    ASSERT_GE(a.noise_std, 0.0);
    ASSERT_LE(a.noise_std, 1.0);
  }
}

TEST(Ar2, DegenerateCorrelationRejected) {
  EXPECT_RAMPCAST_ERROR(ar2_from_correlations(1.0, 1.0), Errc::DegenerateAutocorrelation);
  EXPECT_RAMPCAST_ERROR(ar2_from_correlations(std::nan(""), 0.0), Errc::DegenerateAutocorrelation);
  const std::vector<std::vector<double>> flat(4, std::vector<double>(10, 0.3));
  EXPECT_RAMPCAST_ERROR(lag_autocorrelations(flat), Errc::DegenerateAutocorrelation);
  EXPECT_RAMPCAST_ERROR(lag_autocorrelations({{1.0}, {2.0}}), Errc::TooFewFrames);
}

// frames[t][cell] of independent stationary AR(2) processes, one per cell.
std::vector<std::vector<double>> simulate_ar2(double phi1, double phi2, std::size_t cells, std::size_t frames,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> out(frames, std::vector<double>(cells));
  for (std::size_t i = 0; i < cells; ++i) {
    double x1 = 0.0, x2 = 0.0;
    for (int b = 0; b < 300; ++b) {
      const double x = phi1 * x1 + phi2 * x2 + z(rng);
      x2 = x1;
      x1 = x;
    }
    for (std::size_t t = 0; t < frames; ++t) {
      const double x = phi1 * x1 + phi2 * x2 + z(rng);
      x2 = x1;
      x1 = x;
      out[t][i] = x;
    }
  }
  return out;
}

TEST(Ar2, LagCorrelationsMatchPerSeriesOracle) {
  const auto frames = simulate_ar2(0.7, 0.1, 1, 5000, 8);
  std::vector<double> series;
  for (const auto& f : frames) series.push_back(f[0]);
  const auto [r1, r2] = lag_autocorrelations(frames);
  EXPECT_NEAR(r1, oracle::autocorrelation(series, 1), 2e-3);
  EXPECT_NEAR(r2, oracle::autocorrelation(series, 2), 2e-3);
}

TEST(Ar2, RecoversSimulatedCoefficients) {
  double p1 = 0.0, p2 = 0.0;
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    const auto p = fit_ar2({simulate_ar2(1.2, -0.5, 2500, 4, 100 + s)});
    p1 += p.phi1[0];
    p2 += p.phi2[0];
  }
  EXPECT_NEAR(p1 / seeds, 1.2, 0.05);
  EXPECT_NEAR(p2 / seeds, -0.5, 0.05);
}

TEST(Ar2, WhiteNoiseHasNoMemory) {
  const auto p = fit_ar2({simulate_ar2(0.0, 0.0, 5000, 4, 3)});
  ASSERT_EQ(p.levels(), 1u);
  EXPECT_NEAR(p.phi1[0], 0.0, 0.05);
  EXPECT_NEAR(p.phi2[0], 0.0, 0.05);
  EXPECT_NEAR(p.noise_std[0], 1.0, 0.01);
}

// --- noise -----------------------------------------------------------------

TEST(Noise, StandardizedAndDeterministic) {
  const NoiseGenerator gen(white_field(128, 2));
  const auto a = gen.generate(42);
  const auto b = gen.generate(42);
  const auto c = gen.generate(43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  const double m = std::accumulate(a.begin(), a.end(), 0.0) / double(a.size());
  EXPECT_NEAR(m, 0.0, 0.02);
  EXPECT_NEAR(std::sqrt(variance(a)), 1.0, 0.02);
}

TEST(Noise, WhiteReferenceGivesFlatSpectrum) {
  const std::size_t n = 32;
  const NoiseGenerator gen(white_field(n, 5));
  std::vector<double> mean;
  const int draws = 8;
  for (int s = 0; s < draws; ++s) {
    const auto p = oracle::naive_radial_power(gen.generate(std::uint64_t(s)), n, n);
    mean.resize(p.size(), 0.0);
    for (std::size_t b = 0; b < p.size(); ++b) mean[b] += p[b] / draws;
  }
  std::vector<double> mid(mean.begin() + 4, mean.begin() + 16);
  std::vector<double> sorted = mid;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  for (std::size_t b = 0; b < mid.size(); ++b) {
    EXPECT_GT(mid[b], 0.5 * median) << "bin " << b + 4;
    EXPECT_LT(mid[b], 2.0 * median) << "bin " << b + 4;
  }
  EXPECT_NEAR(mean[0], 0.0, 1e-9);
}

TEST(Noise, FollowsReferenceSpectrum) {
  const std::size_t n = 32;
  const auto ref = test::sample_field(square_grid(n), at("2021-06-01T10:00:00Z"), ingest::FieldKind::CSI,
                                      [](double, double c) { return 0.5 + 0.3 * std::sin(2.0 * std::numbers::pi * 4.0 * c / 32.0); });
  const auto p = oracle::naive_radial_power(NoiseGenerator(ref).generate(9), n, n);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  EXPECT_GT(p[4] / total, 0.9);
  // Library periodogram agrees with the direct DFT.
  const auto noise = NoiseGenerator(ref).generate(9);
  const auto fast = radial_power_spectrum(noise, n, n);
  const auto slow = oracle::naive_radial_power(noise, n, n);
  ASSERT_EQ(fast.size(), slow.size());
  for (std::size_t b = 0; b < fast.size(); ++b) EXPECT_NEAR(fast[b], slow[b], 1e-6 * (1.0 + slow[b]));
}

TEST(Noise, InsufficientReferenceRejected) {
  auto f = white_field(8, 1);
  for (std::size_t i = 0; i < 33; ++i) f.invalidate(i);
  EXPECT_RAMPCAST_ERROR(NoiseGenerator{f}, Errc::InsufficientReference);
  EXPECT_RAMPCAST_ERROR(correlated_noise(square_grid(9), white_field(8, 1), 1), Errc::GeometryMismatch);
}

TEST(Noise, ConstantReferenceFallsBackToWhite) {
  const auto ref = test::sample_field(square_grid(16), at("2021-06-01T10:00:00Z"), ingest::FieldKind::CSI,
                                      [](double, double) { return 1.0; });
  const auto v = correlated_noise(ref.geometry(), ref, 4);
  EXPECT_NEAR(std::sqrt(variance(std::vector<double>(v.values().begin(), v.values().end()))), 1.0, 1e-9);
}

}  // namespace
}  // namespace rampcast::nowcast
