#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "rampcast/nowcast.hpp"
#include "rampcast/power.hpp"
#include "rampcast/verify.hpp"

namespace {

using namespace rampcast;

ingest::GridGeometry grid(std::size_t n) { return {47.0, 7.0, 0.02, 0.03, n, n}; }

ingest::FieldSequence moving_scene(std::size_t n) {
  std::vector<ingest::RasterField> frames;
  const Instant t0 = parse_iso8601("2021-06-01T10:00:00Z");
  for (int k = 0; k < 4; ++k) {
    std::vector<double> v(n * n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        v[r * n + c] = 0.6 + 0.3 * std::sin(0.2 * (double(c) - 1.5 * k)) * std::cos(0.15 * double(r));
    frames.emplace_back(grid(n), t0 + kStep * k, ingest::FieldKind::CSI, std::move(v));
  }
  return ingest::FieldSequence(std::move(frames));
}

void BM_Crps(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  std::vector<double> m(std::size_t(state.range(0)));
  for (auto& x : m) x = d(rng);
  for (auto _ : state) benchmark::DoNotOptimize(verify::crps_ensemble(m, 0.3));
}
BENCHMARK(BM_Crps)->Arg(1)->Arg(10)->Arg(50);

void BM_MotionEstimate(benchmark::State& state) {
  const auto seq = moving_scene(std::size_t(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(nowcast::estimate_cmv(seq));
}
BENCHMARK(BM_MotionEstimate)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Steps(benchmark::State& state) {
  const auto seq = moving_scene(64);
  const auto motion = nowcast::estimate_cmv(seq);
  for (auto _ : state)
    benchmark::DoNotOptimize(nowcast::steps_forecast(seq, motion, int(state.range(0)), 8, 42));
}
BENCHMARK(BM_Steps)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_GbrtTrain(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = std::size_t(state.range(0));
  std::vector<power::FeatureVector> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i].sza = 20.0 + 80.0 * u(rng);
    x[i].ssi = x[i].sza < 90 ? 900.0 * u(rng) : 0.0;
    x[i].hod_sin = std::sin(6.283 * u(rng));
    y[i] = 2.0 * x[i].ssi;
  }
  for (auto _ : state) benchmark::DoNotOptimize(power::train_station_model("S", x, y, 1800.0));
}
BENCHMARK(BM_GbrtTrain)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
