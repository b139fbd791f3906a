#include "rampcast/pipeline/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "json.hpp"
#include "rampcast/error.hpp"
#include "rampcast/parallel.hpp"
#include "rampcast/solargeo.hpp"

namespace rampcast::pipeline {

using nlohmann::json;
using std::chrono::minutes;

namespace {

constexpr double kStepMinutes = 15.0;

double steps_since_midnight(Instant t) { return utc_hours(t) * 60.0 / kStepMinutes; }

double wrap(double x, double lo, double period) {
  double r = std::fmod(x - lo, period);
  if (r < 0) r += period;
  return lo + r;
}

Instant floor_step(Instant t) {
  const auto s = t.time_since_epoch().count();
  const auto step = std::chrono::duration_cast<std::chrono::seconds>(kStep).count();
  return Instant{std::chrono::seconds{s - ((s % step) + step) % step}};
}

// Optical-depth transmission of the dissipating deck; tau >= 1 is fully opaque to depth.
double tau_at(const DayPlan& d, const SyntheticScenario& sc, Instant t) {
  const double dt_min = double((t - *d.onset).count()) / 60.0;
  return std::min(sc.tau0, std::exp2(-dt_min / sc.halving_minutes));
}

}  // namespace

SceneModel::SceneModel(const SyntheticScenario& scenario, const solargeo::ClearSkyConfig& clearsky,
                       ramp::ReferencePoint ref)
    : sc_(scenario), clearsky_(clearsky), ref_(ref) {
  sc_.validate();
  const auto& g = sc_.grid;
  center_row_ = 0.5 * double(g.nrows - 1);
  center_col_ = 0.5 * double(g.ncols - 1);

  // Fleet layout.
  std::mt19937_64 fleet_rng(mix_seed(sc_.seed, 100));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double margin = 2.0;
  const double half = sc_.cluster_px > 0 ? 0.5 * sc_.cluster_px : 0.0;
  for (int s = 0; s < sc_.stations; ++s) {
    SyntheticStation st;
    if (half > 0) {
      st.row = std::clamp(center_row_ + (2.0 * unit(fleet_rng) - 1.0) * half, margin, double(g.nrows - 1) - margin);
      st.col = std::clamp(center_col_ + (2.0 * unit(fleet_rng) - 1.0) * half, margin, double(g.ncols - 1) - margin);
    } else {
      st.row = margin + unit(fleet_rng) * (double(g.nrows - 1) - 2 * margin);
      st.col = margin + unit(fleet_rng) * (double(g.ncols - 1) - 2 * margin);
    }
    st.capacity_kw = sc_.capacity_min_kw + unit(fleet_rng) * (sc_.capacity_max_kw - sc_.capacity_min_kw);
    char id[16];
    std::snprintf(id, sizeof id, "S%03d", s + 1);
    st.meta.id = id;
    st.meta.lat = g.lat0 - st.row * g.dlat;
    st.meta.lon = g.lon0 + st.col * g.dlon;
    st.meta.elevation_m = 400.0 + std::round(500.0 * unit(fleet_rng));
    stations_.push_back(st);
  }

  // Day kinds: evenly spread clear days, the remaining days cycle through the pattern.
  const auto n_days = std::size_t(sc_.days);
  std::vector<bool> clear(n_days, sc_.kind == SceneKind::ClearSky);
  if (sc_.kind != SceneKind::ClearSky) {
    const auto n_clear = std::size_t(std::floor(double(n_days) * sc_.clear_day_fraction + 1e-9));
    for (std::size_t j = 0; j < n_clear; ++j)
      clear[std::min(n_days - 1, std::size_t((double(j) + 0.5) * double(n_days) / double(n_clear)))] = true;
  }
  const std::vector<SceneKind> cycle = sc_.day_cycle.empty() ? std::vector<SceneKind>{sc_.kind} : sc_.day_cycle;

  const ramp::DaylightCalendar cal(ref_);
  std::size_t cycle_pos = 0;
  for (std::size_t i = 0; i < n_days; ++i) {
    DayPlan d;
    d.date = CivilDate{std::chrono::sys_days{sc_.start} + std::chrono::days{int(i)}};
    d.kind = clear[i] ? SceneKind::ClearSky : cycle[cycle_pos++ % cycle.size()];
    std::mt19937_64 rng(mix_seed(sc_.seed, 200, i));
    d.u = sc_.motion_u;
    d.v = sc_.motion_v;
    if (sc_.random_motion) {
      const double speed = sc_.speed_min + unit(rng) * (sc_.speed_max - sc_.speed_min);
      const double dir = 2.0 * std::numbers::pi * unit(rng);
      d.u = speed * std::cos(dir);
      d.v = speed * std::sin(dir);
    }
    if (d.kind == SceneKind::ClearSky) {
      days_.push_back(std::move(d));
      continue;
    }
    for (int b = 0; b < sc_.blobs; ++b) {
      Blob bl;
      bl.row = unit(rng) * double(g.nrows);
      bl.col = unit(rng) * double(g.ncols);
      bl.sigma = sc_.blob_sigma_min_px + unit(rng) * (sc_.blob_sigma_max_px - sc_.blob_sigma_min_px);
      bl.depth = sc_.blob_depth_min + unit(rng) * (sc_.blob_depth_max - sc_.blob_depth_min);
      d.blobs.push_back(bl);
    }

    const auto bounds = cal.bounds(d.date);
    if (!bounds) {
      days_.push_back(std::move(d));
      continue;
    }
    const auto [rise, set] = *bounds;
    // Onset well inside the forecast schedule so the event is sampled by several inits.
    const Instant lo = floor_step(rise + std::chrono::minutes{210});
    const Instant hi = floor_step(set - std::chrono::minutes{300});
    if (hi > lo) {
      const auto n_slots = (hi - lo) / kStep;
      const auto slot = std::uniform_int_distribution<long>(0, long(n_slots))(rng);
      d.onset = lo + kStep * slot;
      if (d.kind == SceneKind::Advection) {
        d.direction = ramp::Direction::Down;
        const double speed = std::hypot(d.u, d.v);
        const double nx = speed > 0 ? d.u / speed : 1.0, ny = speed > 0 ? d.v / speed : 0.0;
        double smin = 0.0, smax = 0.0;
        for (const auto& st : stations_) {
          const double s = (st.col - center_col_) * nx + (st.row - center_row_) * ny;
          smin = std::min(smin, s);
          smax = std::max(smax, s);
        }
        const double pad = 4.0 * sc_.deck_edge_px;
        const double v = std::max(speed, 0.05);
        d.window_begin = *d.onset + kStep * long(std::floor((smin - pad) / v) - 1);
        d.window_end = *d.onset + kStep * long(std::ceil((smax + pad) / v) + 1);
      } else {
        d.direction = ramp::Direction::Up;
        // tau falls from 1 to 0.05 over log2(20) halvings; increments after that are tiny.
        d.window_begin = *d.onset - kStep * 2;
        d.window_end = *d.onset + kStep * long(std::ceil(sc_.halving_minutes * std::log2(20.0) / kStepMinutes) + 1);
      }
    }

    if (sc_.dropout_fraction > 0) {
      const auto n_drop = std::size_t(std::llround(sc_.dropout_fraction * double(stations_.size())));
      std::vector<std::size_t> ids(stations_.size());
      std::iota(ids.begin(), ids.end(), 0);
      std::shuffle(ids.begin(), ids.end(), rng);
      ids.resize(n_drop);
      std::sort(ids.begin(), ids.end());
      const Instant dlo = floor_step(rise + std::chrono::hours{2});
      const Instant dhi = floor_step(set - std::chrono::hours{3}) - kStep * sc_.dropout_steps;
      for (int attempt = 0; attempt < 32 && dhi > dlo && !ids.empty(); ++attempt) {
        const auto slot = std::uniform_int_distribution<long>(0, long((dhi - dlo) / kStep))(rng);
        const Instant b = dlo + kStep * slot, e = b + kStep * sc_.dropout_steps;
        // Keep dropout edges clear of the planted window.
        if (d.onset && e + kStep >= d.window_begin && b - kStep <= d.window_end) continue;
        d.dropout_stations = ids;
        d.dropout_begin = b;
        d.dropout_end = e;
        break;
      }
    }
    days_.push_back(std::move(d));
  }
}

const DayPlan* SceneModel::day(CivilDate d) const {
  for (const auto& p : days_)
    if (p.date == d) return &p;
  return nullptr;
}

double SceneModel::csi(double row, double col, Instant t) const {
  const DayPlan* d = day(civil_date(t));
  if (!d || d->kind == SceneKind::ClearSky) return 1.0;
  const double k = steps_since_midnight(t);
  const auto& g = sc_.grid;

  // Background cumulus on a periodic extended domain so blobs re-enter upstream.
  const double m = 3.0 * sc_.blob_sigma_max_px;
  const double pr = double(g.nrows) + 2 * m, pc = double(g.ncols) + 2 * m;
  double dip = 0.0;
  for (const auto& b : d->blobs) {
    const double br = wrap(b.row + d->v * k, -m, pr), bc = wrap(b.col + d->u * k, -m, pc);
    const double dr = row - br, dc = col - bc;
    dip += b.depth * std::exp(-(dr * dr + dc * dc) / (2.0 * b.sigma * b.sigma));
  }
  double value = std::max(0.05, 1.0 - dip);

  if (d->onset) {
    const double k_on = steps_since_midnight(*d->onset);
    switch (d->kind) {
      case SceneKind::Advection: {
        const double speed = std::hypot(d->u, d->v);
        const double nx = speed > 0 ? d->u / speed : 1.0, ny = speed > 0 ? d->v / speed : 0.0;
        const double s = (col - center_col_) * nx + (row - center_row_) * ny - speed * (k - k_on);
        const double cover = 1.0 / (1.0 + std::exp(s / sc_.deck_edge_px));
        value *= 1.0 - sc_.deck_depth * cover;
        break;
      }
      case SceneKind::Dissipation: {
        value *= 1.0 - sc_.deck_depth * std::min(1.0, tau_at(*d, sc_, t));
        break;
      }
      case SceneKind::FogClearing: {
        const double dist = std::hypot(row - center_row_, col - center_col_);
        const double w = 1.0 / (1.0 + std::exp((dist - sc_.fog_radius_px) / 1.5));
        value *= 1.0 - sc_.deck_depth * std::min(1.0, tau_at(*d, sc_, t)) * w;
        break;
      }
      case SceneKind::ClearSky: break;
    }
  }
  return value;
}

ingest::RasterField SceneModel::csi_field(Instant t) const {
  const auto& g = sc_.grid;
  ingest::RasterField f(g, t, ingest::FieldKind::CSI, 1.0);
  for (std::size_t r = 0; r < g.nrows; ++r)
    for (std::size_t c = 0; c < g.ncols; ++c) f.set(r, c, csi(double(r), double(c), t));
  return f;
}

ingest::RasterField SceneModel::ssi_field(Instant t) const {
  const auto& g = sc_.grid;
  const auto clear = solargeo::clearsky_grid(g, t, clearsky_.params);
  ingest::RasterField f(g, t, ingest::FieldKind::SSI, 0.0);
  for (std::size_t r = 0; r < g.nrows; ++r)
    for (std::size_t c = 0; c < g.ncols; ++c) {
      const std::size_t i = r * g.ncols + c;
      f.set(i, clear[i] > 0 ? csi(double(r), double(c), t) * clear[i] : 0.0);
    }
  return f;
}

double SceneModel::clean_power_kw(std::size_t station, Instant t) const {
  const auto& st = stations_.at(station);
  const auto pos = solargeo::solar_position(st.meta.lat, st.meta.lon, t);
  if (!(pos.sza < 90.0)) return 0.0;
  const double ssi = csi(st.row, st.col, t) * solargeo::clearsky_ghi(pos, clearsky_.params, t);
  return st.capacity_kw * (ssi / 1000.0) * std::pow(std::cos(pos.sza * std::numbers::pi / 180.0), 0.1);
}

std::vector<Instant> SceneModel::frame_times(CivilDate d) const {
  const ramp::DaylightCalendar cal(ref_);
  const Instant day0 = midnight(d);
  std::vector<Instant> out;
  const auto b = cal.bounds(d);
  if (!b) return out;
  Instant lo = floor_step(b->first - minutes{30});
  Instant hi = b->second + minutes{30};
  lo = std::max(lo, day0);
  hi = std::min(hi, day0 + std::chrono::hours{24} - kStep);
  for (Instant t = lo; t <= hi; t += kStep) out.push_back(t);
  return out;
}

std::vector<ingest::StationSeries> synthesize_fleet(const SceneModel& scene) {
  const auto& sc = scene.scenario();
  const auto& st = scene.stations();
  const Instant begin = midnight(sc.start);
  const std::size_t n = std::size_t(sc.days) * 96;
  std::vector<ingest::StationSeries> out(st.size());
  parallel_for(st.size(), [&](std::size_t s) {
    auto& series = out[s];
    series.meta = st[s].meta;
    series.timestamps.resize(n);
    series.power_kw.resize(n);
    series.quality.assign(n, 1);
    std::mt19937_64 rng(mix_seed(sc.seed, 300, s));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const Instant t = begin + kStep * long(i);
      series.timestamps[i] = t;
      double p = scene.clean_power_kw(s, t);
      // Draw for every slot so the stream position never depends on the scene.
      const double eps = noise(rng);
      if (p > 0.0) p = std::max(0.0, p + sc.noise_fraction * st[s].capacity_kw * eps);
      // 1/8 kW steps keep every fleet sum exact in double precision.
      series.power_kw[i] = std::round(p * 8.0) / 8.0;
    }
    for (const auto& d : scene.days()) {
      if (!std::binary_search(d.dropout_stations.begin(), d.dropout_stations.end(), s)) continue;
      for (Instant t = d.dropout_begin; t < d.dropout_end; t += kStep) {
        const auto idx = series.index_of(t);
        if (!idx) continue;
        series.quality[*idx] = 0;
        series.power_kw[*idx] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  });
  return out;
}

void generate_synthetic(const PipelineConfig& cfg) {
  const auto& sc = cfg.synthetic;
  sc.validate();
  const auto ref = reference_point(cfg, sc.grid);
  const SceneModel scene(sc, cfg.clearsky, ref);

  namespace fs = std::filesystem;
  if (fs::exists(cfg.satellite)) fs::remove_all(cfg.satellite);
  for (const auto& d : scene.days()) {
    const auto times = scene.frame_times(d.date);
    if (times.empty()) continue;
    std::vector<ingest::RasterField> frames(times.size());
    parallel_for(times.size(), [&](std::size_t i) { frames[i] = scene.ssi_field(times[i]); });
    ingest::write_field_archive(cfg.satellite, frames);
  }

  const auto fleet = synthesize_fleet(scene);
  {
    if (cfg.stations.has_parent_path()) fs::create_directories(cfg.stations.parent_path());
    std::ofstream out(cfg.stations, std::ios::trunc);
    if (!out) fail(Errc::IoError, "cannot write " + cfg.stations.string());
    out << metadata_comment(cfg) << '\n';
    ingest::write_station_csv(out, fleet);
  }

  // Truth sidecar for the test harness.
  json truth;
  truth["config_hash"] = cfg.config_hash;
  truth["seeds"] = cfg.seeds();
  truth["generator"] = "power_kw = capacity_kw * (ssi_wm2 / 1000) * max(0, cos(sza))^0.1 + N(0, noise_fraction * capacity_kw) "
                       "during daytime, clipped at 0, rounded to 1/8 kW";
  truth["reference"] = {{"lat", ref.lat}, {"lon", ref.lon}};
  truth["noise_fraction"] = sc.noise_fraction;
  json stations = json::array();
  for (const auto& s : scene.stations())
    stations.push_back({{"id", s.meta.id}, {"row", s.row}, {"col", s.col}, {"capacity_kw", s.capacity_kw}});
  truth["stations"] = stations;

  auto clean_aggregate = [&](Instant t) {
    double sum = 0.0;
    for (std::size_t s = 0; s < scene.stations().size(); ++s) sum += scene.clean_power_kw(s, t);
    return sum / 1000.0;
  };
  json days = json::array();
  for (const auto& d : scene.days()) {
    json j{{"date", format_date(d.date)}, {"kind", to_string(d.kind)}, {"motion_u", d.u}, {"motion_v", d.v}};
    if (d.onset) {
      j["onset"] = format_iso8601(*d.onset);
      j["window_begin"] = format_iso8601(d.window_begin);
      j["window_end"] = format_iso8601(d.window_end);
      j["direction"] = ramp::to_string(d.direction);
      json steps = json::array();
      for (Instant t = d.window_begin; t < d.window_end; t += kStep)
        steps.push_back({{"t_start", format_iso8601(t)}, {"delta_p_mw", clean_aggregate(t + kStep) - clean_aggregate(t)}});
      j["clean_steps"] = steps;
    }
    if (!d.dropout_stations.empty()) {
      json ids = json::array();
      for (auto s : d.dropout_stations) ids.push_back(scene.stations()[s].meta.id);
      j["dropout"] = {{"begin", format_iso8601(d.dropout_begin)}, {"end", format_iso8601(d.dropout_end)}, {"stations", ids}};
    }
    days.push_back(j);
  }
  truth["days"] = days;
  if (cfg.truth.has_parent_path()) fs::create_directories(cfg.truth.parent_path());
  std::ofstream out(cfg.truth, std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot write " + cfg.truth.string());
  out << truth.dump(1) << '\n';
}

}  // namespace rampcast::pipeline
