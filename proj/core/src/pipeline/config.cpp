#include "rampcast/pipeline/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rampcast/error.hpp"
#include "rampcast/parallel.hpp"

namespace rampcast::pipeline {

using nlohmann::json;

namespace {

// Tracks which keys of one object were consumed so typos surface as config errors.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(Errc::ConfigError, "config section '" + path_ + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(Errc::ConfigError, "config key '" + name(key) + "' has the wrong type");
    }
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), name(key));
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(Errc::ConfigError, "unknown config key '" + name(it.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) fail(Errc::ConfigError, what);
}

std::vector<SceneKind> parse_kinds(const json& j) {
  std::vector<SceneKind> out;
  if (!j.is_array()) fail(Errc::ConfigError, "synthetic.day_cycle must be an array");
  for (const auto& k : j) {
    if (!k.is_string()) fail(Errc::ConfigError, "synthetic.day_cycle entries must be strings");
    out.push_back(parse_scene_kind(k.get<std::string>()));
  }
  return out;
}

void read_synthetic(Section s, SyntheticScenario& sc) {
  if (s.has("kind")) {
    std::string k;
    s.get("kind", k);
    sc.kind = parse_scene_kind(k);
  }
  if (s.has("day_cycle")) sc.day_cycle = parse_kinds(s.raw("day_cycle"));
  s.get("clear_day_fraction", sc.clear_day_fraction);
  if (s.has("start_date")) {
    std::string d;
    s.get("start_date", d);
    try {
      sc.start = parse_date(d);
    } catch (const Error&) {
      fail(Errc::ConfigError, "synthetic.start_date is not YYYY-MM-DD");
    }
  }
  s.get("days", sc.days);
  if (s.has("grid")) {
    Section g = s.sub("grid");
    g.get("lat0", sc.grid.lat0);
    g.get("lon0", sc.grid.lon0);
    g.get("dlat", sc.grid.dlat);
    g.get("dlon", sc.grid.dlon);
    g.get("nrows", sc.grid.nrows);
    g.get("ncols", sc.grid.ncols);
    g.finish();
  }
  s.get("motion_u", sc.motion_u);
  s.get("motion_v", sc.motion_v);
  s.get("random_motion", sc.random_motion);
  s.get("speed_min", sc.speed_min);
  s.get("speed_max", sc.speed_max);
  s.get("blobs", sc.blobs);
  s.get("blob_sigma_min_px", sc.blob_sigma_min_px);
  s.get("blob_sigma_max_px", sc.blob_sigma_max_px);
  s.get("blob_depth_min", sc.blob_depth_min);
  s.get("blob_depth_max", sc.blob_depth_max);
  s.get("deck_depth", sc.deck_depth);
  s.get("deck_edge_px", sc.deck_edge_px);
  s.get("tau0", sc.tau0);
  s.get("halving_minutes", sc.halving_minutes);
  s.get("fog_radius_px", sc.fog_radius_px);
  s.get("stations", sc.stations);
  s.get("cluster_px", sc.cluster_px);
  s.get("capacity_min_kw", sc.capacity_min_kw);
  s.get("capacity_max_kw", sc.capacity_max_kw);
  s.get("noise_fraction", sc.noise_fraction);
  s.get("dropout_fraction", sc.dropout_fraction);
  s.get("dropout_steps", sc.dropout_steps);
  s.get("seed", sc.seed);
  s.finish();
}

json synthetic_json(const SyntheticScenario& sc) {
  json cycle = json::array();
  for (auto k : sc.day_cycle) cycle.push_back(to_string(k));
  return {{"kind", to_string(sc.kind)},
          {"day_cycle", cycle},
          {"clear_day_fraction", sc.clear_day_fraction},
          {"start_date", format_date(sc.start)},
          {"days", sc.days},
          {"grid",
           {{"lat0", sc.grid.lat0},
            {"lon0", sc.grid.lon0},
            {"dlat", sc.grid.dlat},
            {"dlon", sc.grid.dlon},
            {"nrows", sc.grid.nrows},
            {"ncols", sc.grid.ncols}}},
          {"motion_u", sc.motion_u},
          {"motion_v", sc.motion_v},
          {"random_motion", sc.random_motion},
          {"speed_min", sc.speed_min},
          {"speed_max", sc.speed_max},
          {"blobs", sc.blobs},
          {"blob_sigma_min_px", sc.blob_sigma_min_px},
          {"blob_sigma_max_px", sc.blob_sigma_max_px},
          {"blob_depth_min", sc.blob_depth_min},
          {"blob_depth_max", sc.blob_depth_max},
          {"deck_depth", sc.deck_depth},
          {"deck_edge_px", sc.deck_edge_px},
          {"tau0", sc.tau0},
          {"halving_minutes", sc.halving_minutes},
          {"fog_radius_px", sc.fog_radius_px},
          {"stations", sc.stations},
          {"cluster_px", sc.cluster_px},
          {"capacity_min_kw", sc.capacity_min_kw},
          {"capacity_max_kw", sc.capacity_max_kw},
          {"noise_fraction", sc.noise_fraction},
          {"dropout_fraction", sc.dropout_fraction},
          {"dropout_steps", sc.dropout_steps},
          {"seed", sc.seed}};
}

json canonical(const PipelineConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["paths"] = {{"satellite", c.satellite.lexically_relative(c.out_dir).generic_string()},
                {"stations", c.stations.lexically_relative(c.out_dir).generic_string()},
                {"models", c.models.lexically_relative(c.out_dir).generic_string()},
                {"truth", c.truth.lexically_relative(c.out_dir).generic_string()}};
  j["reference"] = c.reference ? json{{"lat", c.reference->lat}, {"lon", c.reference->lon}} : json("centroid");
  j["clearsky"] = {{"linke_turbidity", c.clearsky.params.linke_turbidity},
                   {"altitude_m", c.clearsky.params.altitude_m},
                   {"csi_cap", c.clearsky.csi_cap},
                   {"ghi_floor_wm2", c.clearsky.ghi_floor_wm2}};
  j["ramp"] = {{"percentile", c.ramp.percentile},
               {"coverage_filter", c.ramp.filter.enabled},
               {"max_coverage_change", c.ramp.filter.max_coverage_change},
               {"min_coverage", c.ramp.min_coverage},
               {"hexbin_x_width_hours", c.ramp.hexbin.x_width_hours},
               {"hexbin_y_width", c.ramp.hexbin.y_width}};
  const auto& n = c.nowcast;
  j["nowcast"] = {{"levels", n.levels},
                  {"ensemble_size", n.ensemble_size},
                  {"sigma_speed", n.sigma_speed},
                  {"sigma_dir", n.sigma_dir},
                  {"leads", n.leads},
                  {"cascade_width", n.cascade_width},
                  {"seed", n.seed},
                  {"models", n.models},
                  {"downsample", n.downsample},
                  {"max_inits", n.max_inits},
                  {"lk",
                   {{"pyramid_levels", n.lk.pyramid_levels},
                    {"window", n.lk.window},
                    {"stride", n.lk.stride},
                    {"eigen_floor", n.lk.eigen_floor},
                    {"max_displacement", n.lk.max_displacement},
                    {"max_iterations", n.lk.max_iterations},
                    {"tolerance", n.lk.tolerance},
                    {"multi_pair", n.lk.multi_pair},
                    {"idw_power", n.lk.idw_power}}}};
  const auto& p = c.power;
  j["power"] = {{"trees", p.trees},
                {"max_depth", p.max_depth},
                {"learning_rate", p.learning_rate},
                {"subsample", p.subsample},
                {"patience", p.patience},
                {"seed", p.seed},
                {"lambda", p.lambda},
                {"min_child_weight", p.min_child_weight},
                {"max_bins", p.max_bins},
                {"validation_fraction", p.validation_fraction},
                {"min_daytime_samples", p.min_daytime_samples}};
  j["verify"] = {{"window_open_minutes", c.window.open.count()},
                 {"window_close_minutes", c.window.close.count()},
                 {"anchor", c.window.anchor_end ? "t_end" : "t_start"}};
  j["synthetic"] = synthetic_json(c.synthetic);
  return j;
}

}  // namespace

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::Advection: return "advection";
    case SceneKind::Dissipation: return "dissipation";
    case SceneKind::FogClearing: return "fog_clearing";
    case SceneKind::ClearSky: return "clear_sky";
  }
  return "?";
}

SceneKind parse_scene_kind(const std::string& text) {
  if (text == "advection") return SceneKind::Advection;
  if (text == "dissipation") return SceneKind::Dissipation;
  if (text == "fog_clearing") return SceneKind::FogClearing;
  if (text == "clear_sky") return SceneKind::ClearSky;
  fail(Errc::InvalidScenario, "unknown scenario kind '" + text + "'");
}

void SyntheticScenario::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(Errc::InvalidScenario, what);
  };
  check(start.ok(), "scenario start date is invalid");
  check(days >= 1, "scenario needs at least one day");
  check(grid.nrows >= 8 && grid.ncols >= 8, "scenario grid must be at least 8x8");
  check(grid.dlat > 0 && grid.dlon > 0, "scenario grid spacing must be positive");
  check(std::isfinite(motion_u) && std::isfinite(motion_v), "motion must be finite");
  check(speed_min >= 0 && speed_max >= speed_min, "speed range must satisfy 0 <= min <= max");
  check(blobs >= 0, "blob count must be >= 0");
  check(blob_sigma_min_px > 0 && blob_sigma_max_px >= blob_sigma_min_px, "blob sigma range invalid");
  check(blob_depth_min >= 0 && blob_depth_max >= blob_depth_min && blob_depth_max < 1, "blob depth range invalid");
  check(deck_depth >= 0 && deck_depth < 1, "deck depth must lie in [0, 1)");
  check(deck_edge_px > 0, "deck edge width must be positive");
  check(tau0 > 0 && halving_minutes > 0, "optical depth and halving time must be positive");
  check(fog_radius_px > 0, "fog radius must be positive");
  check(stations >= 1, "fleet needs at least one station");
  check(cluster_px >= 0, "cluster size must be >= 0");
  check(capacity_min_kw > 0 && capacity_max_kw >= capacity_min_kw, "capacity range invalid");
  check(noise_fraction >= 0, "noise fraction must be >= 0");
  check(dropout_fraction >= 0 && dropout_fraction <= 1, "dropout fraction must lie in [0, 1]");
  check(dropout_steps >= 1, "dropout block must cover at least one step");
  check(clear_day_fraction >= 0 && clear_day_fraction <= 1, "clear-day fraction must lie in [0, 1]");
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::map<std::string, std::uint64_t> PipelineConfig::seeds() const {
  return {{"seed", seed}, {"synthetic", synthetic.seed}, {"nowcast", nowcast.seed}, {"power", power.seed}};
}

PipelineConfig parse_config(const std::string& json_text, const Overrides& overrides) {
  json root = json::object();
  if (!json_text.empty()) {
    try {
      root = json::parse(json_text);
    } catch (const json::exception& e) {
      fail(Errc::ConfigError, std::string("config is not valid JSON: ") + e.what());
    }
  }
  PipelineConfig c;
  Section top(root, "");
  top.get("seed", c.seed);
  if (overrides.seed) c.seed = *overrides.seed;
  c.out_dir = overrides.out_dir.value_or(".");

  std::string satellite = "satellite", stations = "stations.csv", models = "models", truth = "truth.json";
  if (top.has("paths")) {
    Section p = top.sub("paths");
    p.get("satellite", satellite);
    p.get("stations", stations);
    p.get("models", models);
    p.get("truth", truth);
    p.finish();
  }
  c.satellite = c.out_dir / satellite;
  c.stations = c.out_dir / stations;
  c.models = c.out_dir / models;
  c.truth = c.out_dir / truth;

  if (top.has("reference")) {
    Section r = top.sub("reference");
    ramp::ReferencePoint ref;
    require(r.has("lat") && r.has("lon"), "reference needs lat and lon");
    r.get("lat", ref.lat);
    r.get("lon", ref.lon);
    r.finish();
    require(ref.lat >= -90 && ref.lat <= 90 && ref.lon >= -180 && ref.lon <= 180, "reference outside lat/lon range");
    c.reference = ref;
  }

  if (top.has("clearsky")) {
    Section s = top.sub("clearsky");
    if (s.has("linke_turbidity")) {
      const json& tl = s.raw("linke_turbidity");
      if (tl.is_number()) {
        c.clearsky.params.linke_turbidity.fill(tl.get<double>());
      } else if (tl.is_array() && tl.size() == 12) {
        for (std::size_t i = 0; i < 12; ++i) {
          require(tl[i].is_number(), "clearsky.linke_turbidity entries must be numbers");
          c.clearsky.params.linke_turbidity[i] = tl[i].get<double>();
        }
      } else {
        fail(Errc::ConfigError, "clearsky.linke_turbidity must be a number or a 12-element array");
      }
    }
    s.get("altitude_m", c.clearsky.params.altitude_m);
    s.get("csi_cap", c.clearsky.csi_cap);
    s.get("ghi_floor_wm2", c.clearsky.ghi_floor_wm2);
    s.finish();
  }
  try {
    c.clearsky.params.validate();
  } catch (const Error& e) {
    fail(Errc::ConfigError, e.what());
  }
  require(c.clearsky.csi_cap > 0, "clearsky.csi_cap must be positive");
  require(c.clearsky.ghi_floor_wm2 >= 0, "clearsky.ghi_floor_wm2 must be >= 0");

  if (top.has("ramp")) {
    Section s = top.sub("ramp");
    s.get("percentile", c.ramp.percentile);
    s.get("coverage_filter", c.ramp.filter.enabled);
    s.get("max_coverage_change", c.ramp.filter.max_coverage_change);
    s.get("min_coverage", c.ramp.min_coverage);
    s.get("hexbin_x_width_hours", c.ramp.hexbin.x_width_hours);
    s.get("hexbin_y_width", c.ramp.hexbin.y_width);
    s.finish();
  }
  require(c.ramp.percentile >= 0 && c.ramp.percentile <= 100, "ramp.percentile must lie in [0, 100]");
  require(c.ramp.filter.max_coverage_change >= 0, "ramp.max_coverage_change must be >= 0");
  require(c.ramp.hexbin.x_width_hours > 0 && c.ramp.hexbin.y_width > 0, "hexbin widths must be positive");

  bool nowcast_seed = false, power_seed = false, synthetic_seed = false;
  if (top.has("nowcast")) {
    Section s = top.sub("nowcast");
    auto& n = c.nowcast;
    s.get("levels", n.levels);
    s.get("ensemble_size", n.ensemble_size);
    s.get("sigma_speed", n.sigma_speed);
    s.get("sigma_dir", n.sigma_dir);
    s.get("leads", n.leads);
    s.get("cascade_width", n.cascade_width);
    nowcast_seed = s.has("seed");
    s.get("seed", n.seed);
    s.get("models", n.models);
    s.get("downsample", n.downsample);
    s.get("max_inits", n.max_inits);
    if (s.has("lk")) {
      Section l = s.sub("lk");
      l.get("pyramid_levels", n.lk.pyramid_levels);
      l.get("window", n.lk.window);
      l.get("stride", n.lk.stride);
      l.get("eigen_floor", n.lk.eigen_floor);
      l.get("max_displacement", n.lk.max_displacement);
      l.get("max_iterations", n.lk.max_iterations);
      l.get("tolerance", n.lk.tolerance);
      l.get("multi_pair", n.lk.multi_pair);
      l.get("idw_power", n.lk.idw_power);
      l.finish();
    }
    s.finish();
  }
  {
    const auto& n = c.nowcast;
    require(n.levels >= 2, "nowcast.levels must be >= 2");
    require(n.ensemble_size >= 1, "nowcast.ensemble_size must be >= 1");
    require(n.sigma_speed >= 0 && n.sigma_dir >= 0, "nowcast perturbation sigmas must be >= 0");
    require(n.leads >= 1, "nowcast.leads must be >= 1");
    require(n.cascade_width > 0, "nowcast.cascade_width must be positive");
    require(n.lk.pyramid_levels >= 1 && n.lk.window >= 4 && n.lk.stride >= 1 && n.lk.eigen_floor > 0 &&
                n.lk.max_displacement > 0 && n.lk.max_iterations >= 1 && n.lk.tolerance > 0 && n.lk.idw_power > 0,
            "invalid nowcast.lk settings");
    for (const auto& m : n.models)
      require(m == "persistence" || m == "advection" || m == "steps", "unknown nowcast model '" + m + "'");
  }

  if (top.has("power")) {
    Section s = top.sub("power");
    auto& p = c.power;
    s.get("trees", p.trees);
    s.get("max_depth", p.max_depth);
    s.get("learning_rate", p.learning_rate);
    s.get("subsample", p.subsample);
    s.get("patience", p.patience);
    power_seed = s.has("seed");
    s.get("seed", p.seed);
    s.get("lambda", p.lambda);
    s.get("min_child_weight", p.min_child_weight);
    s.get("max_bins", p.max_bins);
    s.get("validation_fraction", p.validation_fraction);
    s.get("min_daytime_samples", p.min_daytime_samples);
    s.finish();
  }
  c.power.validate();

  if (top.has("verify")) {
    Section s = top.sub("verify");
    int open = int(c.window.open.count()), close = int(c.window.close.count());
    std::string anchor = "t_end";
    s.get("window_open_minutes", open);
    s.get("window_close_minutes", close);
    s.get("anchor", anchor);
    s.finish();
    require(open >= 0 && close > open, "verify window must satisfy 0 <= open < close");
    require(anchor == "t_end" || anchor == "t_start", "verify.anchor must be t_end or t_start");
    c.window.open = std::chrono::minutes{open};
    c.window.close = std::chrono::minutes{close};
    c.window.anchor_end = anchor == "t_end";
  }

  if (top.has("synthetic")) {
    synthetic_seed = root.at("synthetic").contains("seed");
    try {
      read_synthetic(top.sub("synthetic"), c.synthetic);
    } catch (const Error& e) {
      if (e.code() == Errc::InvalidScenario) fail(Errc::ConfigError, e.what());
      throw;
    }
  }
  top.finish();

  // Stage seeds not pinned explicitly derive from the top-level seed.
  if (!synthetic_seed) c.synthetic.seed = mix_seed(c.seed, 1);
  if (!nowcast_seed) c.nowcast.seed = mix_seed(c.seed, 2);
  if (!power_seed) c.power.seed = mix_seed(c.seed, 3);

  c.canonical_json = canonical(c).dump();
  c.config_hash = fnv1a_hex(c.canonical_json);
  return c;
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& file, const Overrides& overrides) {
  if (!file) return parse_config("", overrides);
  std::ifstream in(*file);
  if (!in) fail(Errc::MissingInput, "config file not found: " + file->string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

ramp::ReferencePoint reference_point(const PipelineConfig& cfg, const ingest::GridGeometry& grid) {
  if (cfg.reference) return *cfg.reference;
  return {grid.lat0 - 0.5 * double(grid.nrows - 1) * grid.dlat, grid.lon0 + 0.5 * double(grid.ncols - 1) * grid.dlon};
}

std::string metadata_comment(const PipelineConfig& cfg) {
  std::string s = "# rampcast config_hash=" + cfg.config_hash + " seeds=";
  bool first = true;
  for (const auto& [name, value] : cfg.seeds()) {
    if (!first) s += ';';
    s += name + ":" + std::to_string(value);
    first = false;
  }
  return s;
}

}  // namespace rampcast::pipeline
