#include "rampcast/pipeline/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rampcast/parallel.hpp"
#include "rampcast/pipeline/svg.hpp"
#include "rampcast/pipeline/synthetic.hpp"
#include "rampcast/power.hpp"
#include "rampcast/solargeo.hpp"
#include "rampcast/text.hpp"

namespace rampcast::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using std::chrono::minutes;

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  return out;
}

// CSV artifacts start with the metadata comment line.
std::ofstream open_csv(const fs::path& path, const PipelineConfig& cfg) {
  auto out = open_output(path);
  out << metadata_comment(cfg) << '\n';
  return out;
}

void write_json(const fs::path& path, const json& j) { open_output(path) << j.dump(1) << '\n'; }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::MissingInput, "missing input " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::ParseError, path.string() + ": " + e.what());
  }
}

json metadata(const PipelineConfig& cfg) { return {{"config_hash", cfg.config_hash}, {"seeds", cfg.seeds()}}; }

void require_file(const fs::path& path) {
  if (!fs::exists(path)) fail(Errc::MissingInput, "missing input " + path.string());
}

std::map<CivilDate, std::vector<Instant>> frames_by_day(const ingest::ArchiveManifest& m) {
  std::map<CivilDate, std::vector<Instant>> out;
  for (const auto t : m.frames) out[civil_date(t)].push_back(t);
  return out;
}

ingest::RasterField prepare(const ingest::RasterField& f, const PipelineConfig& cfg) {
  return cfg.nowcast.downsample ? ingest::downsample_2x2(f) : f;
}

ingest::GridGeometry working_geometry(const ingest::GridGeometry& g, const PipelineConfig& cfg) {
  if (!cfg.nowcast.downsample) return g;
  ingest::RasterField probe(g, Instant{}, ingest::FieldKind::SSI, 0.0);
  return ingest::downsample_2x2(probe).geometry();
}

std::uint64_t epoch_seconds(Instant t) { return std::uint64_t(t.time_since_epoch().count()); }

std::vector<std::string> resolved_models(const PipelineConfig& cfg, const std::vector<std::string>& requested) {
  const auto& list = requested.empty() ? cfg.nowcast.models : requested;
  for (const auto& m : list)
    if (m != "persistence" && m != "advection" && m != "steps") fail(Errc::ConfigError, "unknown model '" + m + "'");
  return list;
}

std::vector<double> read_p95(const PipelineConfig& cfg, const std::vector<ingest::StationSeries>& stations) {
  const auto path = cfg.path(kPowerDir) / "p95.csv";
  require_file(path);
  std::map<std::string, double> p95;
  for (const auto& e : ingest::read_p95_cache(path)) p95[e.station_id] = e.p95_kw;
  std::vector<double> out;
  for (const auto& s : stations) {
    const auto it = p95.find(s.meta.id);
    if (it == p95.end()) fail(Errc::MissingInput, "P95 cache lacks station " + s.meta.id);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

int exit_code(Errc code) noexcept {
  switch (code) {
    case Errc::ConfigError:
    case Errc::InvalidScenario: return 2;
    case Errc::MissingInput:
    case Errc::MissingModel:
    case Errc::MissingFrame: return 3;
    case Errc::CorruptFrame:
    case Errc::GeometryMismatch:
    case Errc::OddDimensions:
    case Errc::DuplicateTimestamp:
    case Errc::CadenceMismatch:
    case Errc::ParseError:
    case Errc::OutOfDomain: return 4;
    default: return 1;
  }
}

ingest::StationLoad load_stations(const PipelineConfig& cfg) {
  require_file(cfg.stations);
  return ingest::load_station_series(cfg.stations);
}

// --- gen-synthetic -------------------------------------------------------------

void cmd_gen_synthetic(const PipelineConfig& cfg) { generate_synthetic(cfg); }

// --- derive-threshold ----------------------------------------------------------

void write_threshold_json(const fs::path& path, const ramp::RampThreshold& thr, const PipelineConfig& cfg) {
  json days = json::array();
  for (const auto& d : thr.clearsky_days) days.push_back(format_date(d));
  json j = metadata(cfg);
  j["delta_p_tr_mw"] = thr.delta_p_tr_mw;
  j["rate_mw_per_min"] = thr.rate_mw_per_min;
  j["percentile"] = thr.percentile;
  j["clearsky_days"] = days;
  j["argmax_instant"] = format_iso8601(thr.provenance.argmax_instant);
  j["pairs_considered"] = thr.provenance.pairs_considered;
  j["pairs_excluded_coverage"] = thr.provenance.pairs_excluded_coverage;
  j["coverage_filter"] = thr.provenance.coverage_filter;
  j["reference"] = {{"lat", thr.provenance.reference.lat}, {"lon", thr.provenance.reference.lon}};
  write_json(path, j);
}

ramp::RampThreshold read_threshold_json(const fs::path& path) {
  const json j = read_json(path);
  ramp::RampThreshold thr;
  try {
    thr.delta_p_tr_mw = j.at("delta_p_tr_mw").get<double>();
    thr.rate_mw_per_min = j.at("rate_mw_per_min").get<double>();
    thr.percentile = j.at("percentile").get<double>();
    for (const auto& d : j.at("clearsky_days")) thr.clearsky_days.push_back(parse_date(d.get<std::string>()));
    thr.provenance.argmax_instant = parse_iso8601(j.at("argmax_instant").get<std::string>());
    thr.provenance.pairs_considered = j.value("pairs_considered", std::size_t{0});
    thr.provenance.pairs_excluded_coverage = j.value("pairs_excluded_coverage", std::size_t{0});
    thr.provenance.coverage_filter = j.value("coverage_filter", true);
    if (j.contains("reference"))
      thr.provenance.reference = {j["reference"].at("lat").get<double>(), j["reference"].at("lon").get<double>()};
  } catch (const json::exception& e) {
    fail(Errc::ParseError, path.string() + ": " + e.what());
  }
  return thr;
}

ramp::RampThreshold cmd_derive_threshold(const PipelineConfig& cfg) {
  const auto manifest = ingest::read_manifest(cfg.satellite);
  if (manifest.kind != ingest::FieldKind::SSI) fail(Errc::WrongKind, "satellite archive must hold SSI");
  const auto ref = reference_point(cfg, manifest.geometry);

  std::map<CivilDate, double> means;
  for (const auto& [day, times] : frames_by_day(manifest)) {
    const auto seq = ingest::load_field_archive(cfg.satellite, std::nullopt, ingest::TimeRange{times.front(), times.back()});
    std::vector<ingest::RasterField> csi(seq.size());
    parallel_for(seq.size(), [&](std::size_t i) { csi[i] = solargeo::ssi_to_csi(seq[i], cfg.clearsky); });
    try {
      means[day] = ramp::mean_daytime_csi(csi, day, ref);
    } catch (const Error& e) {
      if (e.code() != Errc::NoDaytimeFrames) throw;
    }
  }
  const auto clear_days = ramp::select_clearsky_days(means, cfg.ramp.percentile);
  const auto load = load_stations(cfg);
  const auto agg = ramp::aggregate_power(load.stations, cfg.ramp.min_coverage);
  const auto thr = ramp::derive_threshold(agg, clear_days, ref, cfg.ramp.filter, cfg.ramp.percentile);

  write_threshold_json(cfg.path(kThresholdFile), thr, cfg);
  auto out = open_csv(cfg.path(kDailyCsiFile), cfg);
  out << "date,mean_csi,clearsky\n";
  const std::set<CivilDate> chosen(clear_days.begin(), clear_days.end());
  for (const auto& [d, v] : means) out << format_date(d) << ',' << format_number(v) << ',' << chosen.count(d) << '\n';
  return thr;
}

// --- detect-ramps ----------------------------------------------------------------

void write_events_csv(std::ostream& out, std::span<const ramp::RampEvent> events) {
  out << "t_start_utc,t_end_utc,delta_p_mw,direction,normalized_magnitude\n";
  for (const auto& e : events)
    out << format_iso8601(e.t_start) << ',' << format_iso8601(e.t_end) << ',' << format_number(e.delta_p_mw) << ','
        << ramp::to_string(e.direction) << ',' << format_number(e.normalized_magnitude) << '\n';
}

std::vector<ramp::RampEvent> read_events_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::MissingInput, "missing input " + path.string());
  std::string line;
  if (!next_data_line(in, line) || trim(line) != "t_start_utc,t_end_utc,delta_p_mw,direction,normalized_magnitude")
    fail(Errc::ParseError, "unexpected events header in " + path.string());
  std::vector<ramp::RampEvent> out;
  while (next_data_line(in, line)) {
    if (trim(line).empty()) continue;
    const auto cols = split_csv(line);
    if (cols.size() != 5) fail(Errc::ParseError, "events row needs 5 columns: " + line);
    ramp::RampEvent e;
    e.t_start = parse_iso8601(trim(cols[0]));
    e.t_end = parse_iso8601(trim(cols[1]));
    e.delta_p_mw = parse_number(cols[2], "delta_p_mw");
    e.direction = ramp::parse_direction(std::string(trim(cols[3])));
    e.normalized_magnitude = parse_number(cols[4], "normalized_magnitude");
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t_start < b.t_start; });
  return out;
}

std::vector<ramp::RampEvent> cmd_detect_ramps(const PipelineConfig& cfg) {
  const auto thr = read_threshold_json(cfg.path(kThresholdFile));
  const auto load = load_stations(cfg);
  const auto agg = ramp::aggregate_power(load.stations, cfg.ramp.min_coverage);
  const auto events = ramp::detect_ramps(agg, thr, cfg.ramp.filter);
  const fs::path dir = cfg.path(kRampDir);

  {
    auto out = open_csv(dir / "events.csv", cfg);
    write_events_csv(out, events);
  }
  {
    const auto h = ramp::diurnal_histogram(events);
    auto out = open_csv(dir / "diurnal.csv", cfg);
    out << "hour_utc,up,down\n";
    for (int i = 0; i < 24; ++i) out << i << ',' << h.up[std::size_t(i)] << ',' << h.down[std::size_t(i)] << '\n';
  }
  {
    const auto ref = thr.provenance.reference;
    const auto panels = ramp::seasonal_hexbin(agg, thr, ref, cfg.ramp.filter, cfg.ramp.hexbin);
    auto out = open_csv(dir / "hexbin.csv", cfg);
    out << "season,x_center_hours,y_center,count\n";
    for (const auto& p : panels)
      for (const auto& b : p.bins)
        out << ramp::to_string(p.season) << ',' << format_number(b.x_center_hours) << ',' << format_number(b.y_center)
            << ',' << b.count << '\n';
    auto ridge = open_csv(dir / "ridge.csv", cfg);
    ridge << "season,hour,y_center\n";
    for (const auto& p : panels)
      for (const auto& r : p.ridge) ridge << ramp::to_string(p.season) << ',' << r.hour << ',' << format_number(r.y_center) << '\n';
  }
  {
    auto out = open_csv(dir / "aggregate.csv", cfg);
    out << "t_utc,power_mw,coverage\n";
    for (std::size_t i = 0; i < agg.size(); ++i)
      out << format_iso8601(agg.timestamps[i]) << ',' << format_number(agg.power_mw[i]) << ','
          << format_number(agg.coverage[i]) << '\n';
  }
  const auto counts = ramp::exceedance_counts(events);
  std::size_t up = 0;
  for (const auto& e : events) up += e.direction == ramp::Direction::Up;
  json summary = metadata(cfg);
  summary["events"] = events.size();
  summary["up"] = up;
  summary["down"] = events.size() - up;
  summary["exceedance_absolute"] = counts.absolute;
  summary["exceedance_signed_positive"] = counts.signed_positive;
  summary["delta_p_tr_mw"] = thr.delta_p_tr_mw;
  summary["coverage_filter"] = cfg.ramp.filter.enabled;
  write_json(dir / "summary.json", summary);
  return events;
}

// --- nowcast -----------------------------------------------------------------------

std::vector<Instant> archive_inits(const PipelineConfig& cfg) {
  const auto manifest = ingest::read_manifest(cfg.satellite);
  if (manifest.frames.empty()) fail(Errc::MissingInput, "satellite archive " + cfg.satellite.string() + " is empty");
  const std::set<Instant> have(manifest.frames.begin(), manifest.frames.end());
  const auto ref = reference_point(cfg, manifest.geometry);
  const auto all = verify::schedule_inits(civil_date(manifest.frames.front()), civil_date(manifest.frames.back()), ref);
  std::vector<Instant> out;
  for (const auto t : all) {
    bool ok = true;
    for (int k = 0; k < 4 && ok; ++k) ok = have.count(t - kStep * k) > 0;
    if (ok) out.push_back(t);
    if (cfg.nowcast.max_inits && out.size() >= cfg.nowcast.max_inits) break;
  }
  return out;
}

namespace {

fs::path init_dir(const fs::path& root, Instant init) { return root / "forecasts" / format_iso8601(init); }

fs::path member_frame(const fs::path& dir, std::size_t m, int lead) {
  return dir / ("m" + std::to_string(m)) / ("l" + std::to_string(lead) + ".f32");
}

json geometry_json(const ingest::GridGeometry& g) {
  return {{"lat0", g.lat0}, {"lon0", g.lon0}, {"dlat", g.dlat}, {"dlon", g.dlon}, {"nrows", g.nrows}, {"ncols", g.ncols}};
}

ingest::GridGeometry geometry_from(const json& j) {
  ingest::GridGeometry g;
  g.lat0 = j.at("lat0").get<double>();
  g.lon0 = j.at("lon0").get<double>();
  g.dlat = j.at("dlat").get<double>();
  g.dlon = j.at("dlon").get<double>();
  g.nrows = j.at("nrows").get<std::size_t>();
  g.ncols = j.at("ncols").get<std::size_t>();
  return g;
}

}  // namespace

void write_forecast(const fs::path& root, const nowcast::EnsembleForecast& fc, const ingest::GridGeometry& geometry,
                    const PipelineConfig& cfg, const std::string& model) {
  const fs::path dir = init_dir(root, fc.init_time);
  json frames = json::array();
  for (std::size_t m = 0; m < fc.ensemble_size(); ++m) {
    fs::create_directories(dir / ("m" + std::to_string(m)));
    for (std::size_t l = 0; l < fc.leads(); ++l) {
      const auto bytes = ingest::encode_frame(fc.at(m, l));
      auto out = open_output(member_frame(dir, m, fc.lead_minutes[l]));
      out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
      frames.push_back({{"member", m}, {"lead_minutes", fc.lead_minutes[l]}, {"crc32", ingest::frame_crc32(bytes)}});
    }
  }
  json j = geometry_json(geometry);
  j["kind"] = ingest::to_string(fc.kind);
  j["cadence_minutes"] = 15;
  j["fill"] = "NaN";
  j["dtype"] = "float32";
  j["byte_order"] = "little";
  j["model"] = model;
  j["init"] = format_iso8601(fc.init_time);
  j["members"] = fc.ensemble_size();
  j["lead_minutes"] = fc.lead_minutes;
  j["convention"] = fc.convention;
  j["frames"] = frames;
  j.update(metadata(cfg));
  write_json(dir / "manifest.json", j);
}

nowcast::EnsembleForecast read_forecast(const fs::path& root, Instant init) {
  const fs::path dir = init_dir(root, init);
  const json j = read_json(dir / "manifest.json");
  nowcast::EnsembleForecast fc;
  try {
    const auto g = geometry_from(j);
    fc.init_time = init;
    fc.kind = ingest::parse_field_kind(j.at("kind").get<std::string>());
    fc.lead_minutes = j.at("lead_minutes").get<std::vector<int>>();
    fc.convention = j.at("convention").get<std::string>();
    const auto members = j.at("members").get<std::size_t>();
    fc.members.assign(members, std::vector<ingest::RasterField>(fc.lead_minutes.size()));
    for (const auto& f : j.at("frames")) {
      const auto m = f.at("member").get<std::size_t>();
      const int lead = f.at("lead_minutes").get<int>();
      const auto it = std::find(fc.lead_minutes.begin(), fc.lead_minutes.end(), lead);
      if (m >= members || it == fc.lead_minutes.end()) fail(Errc::ParseError, "forecast manifest frame out of range");
      const auto path = member_frame(dir, m, lead);
      std::ifstream in(path, std::ios::binary);
      if (!in) fail(Errc::MissingFrame, "missing forecast frame " + path.string());
      const std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(in), {});
      if (ingest::frame_crc32(bytes) != f.at("crc32").get<std::uint32_t>())
        fail(Errc::CorruptFrame, "checksum mismatch for " + path.string());
      fc.members[m][std::size_t(it - fc.lead_minutes.begin())] =
          ingest::decode_frame(bytes, g, init + minutes{lead}, fc.kind);
    }
  } catch (const json::exception& e) {
    fail(Errc::ParseError, (dir / "manifest.json").string() + ": " + e.what());
  }
  return fc;
}

void cmd_nowcast(const PipelineConfig& cfg, const std::vector<std::string>& requested) {
  const auto models = resolved_models(cfg, requested);
  const auto manifest = ingest::read_manifest(cfg.satellite);
  const auto geometry = working_geometry(manifest.geometry, cfg);
  const auto inits = archive_inits(cfg);
  if (inits.empty()) fail(Errc::MissingInput, "no scheduled init has four input frames in " + cfg.satellite.string());
  const auto& nc = cfg.nowcast;
  const auto leads = nowcast::lead_minutes(nc.leads);

  std::map<std::string, fs::path> roots;
  for (const auto& m : models) {
    roots[m] = cfg.path(kNowcastDir) / m;
    if (fs::exists(roots[m])) fs::remove_all(roots[m]);
  }
  const bool need_motion = std::any_of(models.begin(), models.end(), [](auto& m) { return m != "persistence"; });

  nowcast::StepsConfig steps;
  steps.levels = std::size_t(nc.levels);
  steps.cascade.relative_width = nc.cascade_width;
  steps.lk = nc.lk;
  steps.csi_cap = cfg.clearsky.csi_cap;
  const nowcast::PerturbationConfig perturb{nc.sigma_speed, nc.sigma_dir};

  std::map<std::string, std::string> conventions;
  for (const Instant init : inits) {
    const auto raw = ingest::load_field_archive(cfg.satellite, std::nullopt, ingest::TimeRange{init - kStep * 3, init});
    std::vector<ingest::RasterField> csi(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) csi[i] = solargeo::ssi_to_csi(prepare(raw[i], cfg), cfg.clearsky);
    const ingest::FieldSequence seq(std::move(csi));
    const auto motion = need_motion ? nowcast::estimate_cmv(seq, nc.lk) : nowcast::MotionField{};

    std::vector<std::vector<double>> clear(leads.size());
    parallel_for(leads.size(), [&](std::size_t l) {
      clear[l] = solargeo::clearsky_grid(geometry, init + minutes{leads[l]}, cfg.clearsky.params);
    });

    for (const auto& model : models) {
      nowcast::EnsembleForecast fc;
      if (model == "persistence") {
        fc = nowcast::persistence_forecast(seq, nc.leads);
      } else if (model == "advection") {
        fc = nowcast::pure_advection_ensemble(seq, motion, nc.ensemble_size, nc.leads, perturb,
                                              mix_seed(nc.seed, epoch_seconds(init), 1), cfg.clearsky.csi_cap);
      } else {
        fc = nowcast::steps_forecast(seq, motion, nc.ensemble_size, nc.leads, mix_seed(nc.seed, epoch_seconds(init), 2),
                                     steps);
      }
      conventions[model] = fc.convention;
      nowcast::EnsembleForecast ssi = fc;
      ssi.kind = ingest::FieldKind::SSI;
      parallel_for(fc.ensemble_size(), [&](std::size_t m) {
        for (std::size_t l = 0; l < fc.leads(); ++l) ssi.members[m][l] = solargeo::csi_to_ssi(fc.at(m, l), clear[l]);
      });
      write_forecast(roots[model], ssi, geometry, cfg, model);
    }
  }

  for (const auto& model : models) {
    json inits_json = json::array();
    for (const auto t : inits) inits_json.push_back(format_iso8601(t));
    json j = metadata(cfg);
    j["model"] = model;
    j["kind"] = "SSI";
    j["geometry"] = geometry_json(geometry);
    j["members"] = model == "persistence" ? 1 : nc.ensemble_size;
    j["lead_minutes"] = leads;
    j["convention"] = conventions[model];
    j["inits"] = inits_json;
    j["layout"] = "forecasts/<init ISO8601>/m<member>/l<lead minutes>.f32";
    write_json(roots[model] / "manifest.json", j);
  }
}

// --- train-power -------------------------------------------------------------------

void cmd_train_power(const PipelineConfig& cfg) {
  auto load = load_stations(cfg);
  auto& stations = load.stations;
  for (auto& s : stations) ingest::compute_p95(s);
  {
    auto out = open_csv(cfg.path(kPowerDir) / "p95.csv", cfg);
    ingest::write_p95_cache(out, stations);
  }

  // Satellite SSI at every station and archive time.
  const auto manifest = ingest::read_manifest(cfg.satellite);
  std::vector<std::vector<double>> ssi(stations.size());
  for (std::size_t s = 0; s < stations.size(); ++s)
    ssi[s].assign(stations[s].size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& [day, times] : frames_by_day(manifest)) {
    const auto seq = ingest::load_field_archive(cfg.satellite, std::nullopt, ingest::TimeRange{times.front(), times.back()});
    parallel_for(seq.size(), [&](std::size_t i) {
      const auto f = prepare(seq[i], cfg);
      for (std::size_t s = 0; s < stations.size(); ++s) {
        const auto idx = stations[s].index_of(f.timestamp());
        if (!idx) continue;
        if (const auto v = power::interpolate_to_station(f, stations[s].meta.lat, stations[s].meta.lon)) ssi[s][*idx] = *v;
      }
    });
  }

  std::vector<power::StationPowerModel> models(stations.size());
  parallel_for(stations.size(), [&](std::size_t s) {
    const auto& st = stations[s];
    std::vector<power::FeatureVector> features;
    std::vector<double> targets;
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (!st.quality[i]) continue;
      double v = ssi[s][i];
      if (std::isnan(v)) {
        // No satellite frame: usable only as a night sample.
        const auto pos = solargeo::solar_position(st.meta.lat, st.meta.lon, st.timestamps[i]);
        if (pos.sza < 90.0) continue;
        v = 0.0;
      }
      features.push_back(power::build_features(st.meta, st.timestamps[i], v));
      targets.push_back(st.power_kw[i]);
    }
    models[s] = power::train_station_model(st.meta.id, features, targets, *st.p95_kw, cfg.power);
  });
  for (const auto& m : models) power::save_model(cfg.models, m);

  auto out = open_csv(cfg.path(kPowerDir) / "training.csv", cfg);
  out << "station_id,samples,train_samples,validation_samples,daytime_samples,train_nrmse,validation_nrmse,best_iteration\n";
  for (const auto& m : models) {
    const auto& s = m.summary;
    out << m.station_id << ',' << s.samples << ',' << s.train_samples << ',' << s.validation_samples << ','
        << s.daytime_samples << ',' << format_number(s.train_nrmse) << ',' << format_number(s.validation_nrmse) << ','
        << s.best_iteration << '\n';
  }
}

// --- evaluate ------------------------------------------------------------------------

ModelScores load_model_scores(const PipelineConfig& cfg, const std::string& model) {
  const fs::path root = cfg.path(kNowcastDir) / model;
  const json top = read_json(root / "manifest.json");
  std::vector<Instant> inits;
  std::vector<int> leads;
  std::size_t members = 0;
  try {
    for (const auto& t : top.at("inits")) inits.push_back(parse_iso8601(t.get<std::string>()));
    leads = top.at("lead_minutes").get<std::vector<int>>();
    members = top.at("members").get<std::size_t>();
  } catch (const json::exception& e) {
    fail(Errc::ParseError, (root / "manifest.json").string() + ": " + e.what());
  }

  const auto load = load_stations(cfg);
  const auto& stations = load.stations;
  const auto p95 = read_p95(cfg, stations);
  std::map<std::string, power::StationPowerModel> models;
  std::vector<ingest::StationMeta> metas;
  std::vector<std::string> ids;
  for (const auto& s : stations) {
    models.emplace(s.meta.id, power::load_model(cfg.models, s.meta.id));
    metas.push_back(s.meta);
    ids.push_back(s.meta.id);
  }

  ModelScores out{model, verify::ScoreData(ids, p95, inits, leads, members)};
  auto& data = out.data;
  for (std::size_t s = 0; s < stations.size(); ++s)
    for (std::size_t n = 0; n < inits.size(); ++n)
      for (std::size_t l = 0; l < leads.size(); ++l)
        if (const auto p = stations[s].power_at(inits[n] + minutes{leads[l]})) data.observation(s, n, l) = *p;
  for (std::size_t n = 0; n < inits.size(); ++n) {
    const auto fc = read_forecast(root, inits[n]);
    data.set_forecast(n, power::convert_forecast(fc, metas, models));
  }
  return out;
}

void cmd_evaluate(const PipelineConfig& cfg) {
  const auto events = read_events_csv(cfg.path(kRampDir) / "events.csv");
  const fs::path dir = cfg.path(kEvaluationDir);
  std::vector<verify::ScoreTable> tables;
  std::optional<verify::CaseList> cases;
  json summary = metadata(cfg);
  summary["window"] = cfg.window.describe();
  summary["ghi_floor_wm2"] = cfg.clearsky.ghi_floor_wm2;
  json model_info = json::object();

  for (const auto& model : cfg.nowcast.models) {
    const auto ms = load_model_scores(cfg, model);
    if (!cases) cases = verify::build_case_list(ms.data.init_times, events, cfg.window);
    if (cases->cases.size() != ms.data.forecasts())
      fail(Errc::InvalidArgument, "model " + model + " covers a different init schedule");
    std::vector<std::size_t> ramp_rows, nonramp_rows;
    for (std::size_t n = 0; n < cases->cases.size(); ++n) {
      if (cases->cases[n].init_time != ms.data.init_times[n])
        fail(Errc::InvalidArgument, "model " + model + " covers a different init schedule");
      if (cases->cases[n].label == verify::CaseLabel::Ramp) ramp_rows.push_back(n);
      if (cases->cases[n].label == verify::CaseLabel::Nonramp) nonramp_rows.push_back(n);
    }
    tables.push_back(verify::score_table(ms.data, {}, model + ":all"));
    json info{{"members", ms.data.members}, {"forecasts", ms.data.forecasts()}};
    if (!ramp_rows.empty() && !nonramp_rows.empty()) {
      tables.push_back(verify::score_table(ms.data, ramp_rows, model + ":ramp"));
      tables.push_back(verify::score_table(ms.data, nonramp_rows, model + ":nonramp"));
      const auto report = verify::degradation(tables[tables.size() - 2], tables.back());
      auto out = open_csv(dir / ("degradation_" + model + ".csv"), cfg);
      verify::write_degradation_csv(out, report);
      std::size_t flagged = 0;
      for (const auto& e : report.entries) flagged += e.zero_denominator;
      info["zero_denominator_entries"] = flagged;
    } else {
      std::cerr << "evaluate: no ramp/nonramp pairs for " << model << "; degradation skipped\n";
    }
    model_info[model] = info;
  }
  if (!cases) fail(Errc::ConfigError, "no nowcast models configured");
  {
    auto out = open_csv(dir / "scores.csv", cfg);
    verify::write_scores_csv(out, tables);
  }
  {
    auto out = open_csv(dir / "cases.csv", cfg);
    verify::write_cases_csv(out, cases->cases);
  }
  summary["ramp_cases"] = cases->ramp;
  summary["nonramp_cases"] = cases->nonramp;
  summary["nonramp_before_dedup"] = cases->nonramp_before_dedup;
  summary["forecasts"] = cases->cases.size();
  summary["models"] = model_info;
  write_json(dir / "summary.json", summary);
}

// --- report ----------------------------------------------------------------------------

namespace {

using Table = std::vector<std::vector<std::string>>;

Table read_table(const fs::path& path, std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) fail(Errc::MissingInput, "missing input " + path.string());
  std::string line;
  if (!next_data_line(in, line)) fail(Errc::ParseError, "empty CSV " + path.string());
  header.clear();
  for (auto c : split_csv(line)) header.emplace_back(trim(c));
  Table rows;
  while (next_data_line(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> row;
    for (auto c : split_csv(line)) row.emplace_back(trim(c));
    if (row.size() != header.size()) fail(Errc::ParseError, "ragged row in " + path.string());
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_svg(const fs::path& path, const svg::Document& doc) { open_output(path) << doc.str(); }

void report_diurnal(const PipelineConfig& cfg, const fs::path& out) {
  std::vector<std::string> h;
  const auto rows = read_table(cfg.path(kRampDir) / "diurnal.csv", h);
  svg::StackedBars bars{"Ramp events per UTC hour", "hour of day (UTC)", "events", {}, {}};
  svg::Series up{"up", {}, {}, "#d62728", false}, down{"down", {}, {}, "#1f77b4", false};
  for (const auto& r : rows) {
    bars.categories.push_back(r[0]);
    up.y.push_back(parse_number(r[1], "up"));
    down.y.push_back(parse_number(r[2], "down"));
  }
  bars.stacks = {up, down};
  svg::Document doc(760, 420);
  bars.draw(doc, 70, 40, 660, 320);
  save_svg(out / "ramp_diurnal.svg", doc);
}

void report_hexbin(const PipelineConfig& cfg, const fs::path& out) {
  std::vector<std::string> h;
  const auto bins = read_table(cfg.path(kRampDir) / "hexbin.csv", h);
  const auto ridge = read_table(cfg.path(kRampDir) / "ridge.csv", h);
  svg::Document doc(1000, 760);
  const char* seasons[] = {"MAM", "JJA", "SON", "DJF"};
  double ymax = 1.2;
  for (const auto& r : bins) ymax = std::max(ymax, parse_number(r[2], "y_center"));
  for (int k = 0; k < 4; ++k) {
    svg::HexPanel p;
    p.title = seasons[k];
    p.x_width = cfg.ramp.hexbin.x_width_hours;
    p.y_width = cfg.ramp.hexbin.y_width;
    p.y_max = ymax;
    for (const auto& r : bins)
      if (r[0] == seasons[k])
        p.cells.push_back({parse_number(r[1], "x"), parse_number(r[2], "y"), parse_number(r[3], "count")});
    for (const auto& r : ridge)
      if (r[0] == seasons[k]) p.ridge.push_back({parse_number(r[1], "hour") + 0.5, parse_number(r[2], "ridge")});
    p.draw(doc, 80 + 480 * (k % 2), 50 + 360 * (k / 2), 400, 280);
  }
  save_svg(out / "ramp_hexbin.svg", doc);
}

void report_aggregate(const PipelineConfig& cfg, const fs::path& out) {
  std::vector<std::string> h;
  const auto agg = read_table(cfg.path(kRampDir) / "aggregate.csv", h);
  const auto events = read_events_csv(cfg.path(kRampDir) / "events.csv");
  const auto thr = read_threshold_json(cfg.path(kThresholdFile));
  // Day with the largest event, else the threshold's argmax day.
  CivilDate day = civil_date(thr.provenance.argmax_instant);
  double best = -1.0;
  for (const auto& e : events)
    if (e.normalized_magnitude > best) {
      best = e.normalized_magnitude;
      day = civil_date(e.t_start);
    }
  svg::Series p{"aggregate power", {}, {}, "#1f77b4", false};
  svg::Series dp{"|dP| per 15 min", {}, {}, "#ff7f0e", false};
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : agg) {
    const Instant t = parse_iso8601(r[0]);
    const double v = parse_number(r[1], "power_mw");
    if (civil_date(t) == day) {
      p.x.push_back(utc_hours(t));
      p.y.push_back(v);
      dp.x.push_back(utc_hours(t));
      dp.y.push_back(std::fabs(v - prev));
    }
    prev = v;
  }
  svg::LineChart top{"Aggregate power " + format_date(day), "hour of day (UTC)", "MW", {p}, false, {}, {}};
  svg::LineChart bottom{"15-minute variation", "hour of day (UTC)", "MW", {dp}, false, {}, {}};
  bottom.y_markers.push_back({thr.delta_p_tr_mw, "#d62728"});
  for (const auto& e : events)
    if (civil_date(e.t_start) == day) top.x_markers.push_back({utc_hours(e.t_start), e.direction == ramp::Direction::Up ? "#d62728" : "#2ca02c"});
  svg::Document doc(760, 760);
  top.draw(doc, 80, 40, 640, 300);
  bottom.draw(doc, 80, 420, 640, 280);
  save_svg(out / "ramp_day.svg", doc);
}

void report_scores(const PipelineConfig& cfg, const fs::path& out) {
  std::vector<std::string> h;
  const auto rows = read_table(cfg.path(kEvaluationDir) / "scores.csv", h);
  const char* metrics[] = {"nrmse", "nmae", "ncrps"};
  svg::Document doc(1200, 420);
  for (int k = 0; k < 3; ++k) {
    svg::LineChart chart{std::string(metrics[k]) + " by lead", "lead (min)", metrics[k], {}, false, {}, {}};
    std::map<std::string, svg::Series> by_subset;
    for (const auto& r : rows) {
      if (r[2] != metrics[k] || r[1] == "all") continue;
      auto& s = by_subset[r[0]];
      s.label = r[0];
      s.x.push_back(parse_number(r[1], "lead"));
      s.y.push_back(parse_number(r[3], "value"));
    }
    std::size_t i = 0;
    for (auto& [name, s] : by_subset) {
      s.color = svg::palette(i++);
      chart.series.push_back(s);
    }
    chart.draw(doc, 70 + 390 * k, 40, 320, 320);
  }
  save_svg(out / "scores_by_lead.svg", doc);

  svg::Document deg(1200, 420);
  for (int k = 0; k < 3; ++k) {
    svg::LineChart chart{std::string(metrics[k]) + " ramp vs nonramp", "lead (min)", "relative difference", {}, true, {}, {}};
    std::size_t i = 0;
    for (const auto& model : cfg.nowcast.models) {
      const auto path = cfg.path(kEvaluationDir) / ("degradation_" + model + ".csv");
      if (!fs::exists(path)) continue;
      std::vector<std::string> hh;
      svg::Series s{model, {}, {}, svg::palette(i++), true};
      for (const auto& r : read_table(path, hh)) {
        if (r[1] != metrics[k]) continue;
        s.x.push_back(parse_number(r[0], "lead"));
        s.y.push_back(parse_number(r[2], "relative_difference"));
      }
      chart.series.push_back(s);
    }
    chart.draw(deg, 70 + 390 * k, 40, 320, 320);
  }
  save_svg(out / "degradation.svg", deg);
}

}  // namespace

void cmd_report(const PipelineConfig& cfg) {
  const fs::path out = cfg.path(kReportDir);
  fs::create_directories(out);
  std::vector<std::string> written;
  report_aggregate(cfg, out);
  report_diurnal(cfg, out);
  report_hexbin(cfg, out);
  written = {"ramp_day.svg", "ramp_diurnal.svg", "ramp_hexbin.svg"};
  if (fs::exists(cfg.path(kEvaluationDir) / "scores.csv")) {
    report_scores(cfg, out);
    written.push_back("scores_by_lead.svg");
    written.push_back("degradation.svg");
  }
  json index = metadata(cfg);
  index["panels"] = written;
  index["sources"] = {kThresholdFile, kRampDir + "/events.csv", kRampDir + "/diurnal.csv", kRampDir + "/hexbin.csv",
                      kRampDir + "/ridge.csv", kRampDir + "/aggregate.csv", kEvaluationDir + "/scores.csv"};
  write_json(out / "index.json", index);
}

}  // namespace rampcast::pipeline
