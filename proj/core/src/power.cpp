#include "rampcast/power.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "rampcast/error.hpp"
#include "rampcast/parallel.hpp"
#include "rampcast/solargeo.hpp"

namespace rampcast::power {

using nlohmann::json;

std::optional<double> interpolate_to_station(const ingest::RasterField& field, double lat, double lon) {
  const auto& g = field.geometry();
  const double y = (g.lat0 - lat) / g.dlat;
  const double x = (lon - g.lon0) / g.dlon;
  const double eps = 1e-9;
  if (!(y >= -eps && y <= double(g.nrows - 1) + eps && x >= -eps && x <= double(g.ncols - 1) + eps))
    fail(Errc::OutOfDomain, "station at (" + std::to_string(lat) + ", " + std::to_string(lon) + ") is outside the grid");
  const double yc = std::clamp(y, 0.0, double(g.nrows - 1)), xc = std::clamp(x, 0.0, double(g.ncols - 1));
  const std::size_t r0 = std::size_t(std::floor(yc)), c0 = std::size_t(std::floor(xc));
  const double fy = yc - double(r0), fx = xc - double(c0);
  const double wy[2] = {1.0 - fy, fy}, wx[2] = {1.0 - fx, fx};
  double sum = 0.0, wsum = 0.0;
  for (int a = 0; a < 2; ++a) {
    if (wy[a] == 0.0) continue;
    for (int b = 0; b < 2; ++b) {
      if (wx[b] == 0.0) continue;
      const std::size_t r = r0 + std::size_t(a), c = c0 + std::size_t(b);
      if (!field.valid(r, c)) continue;
      sum += wy[a] * wx[b] * field(r, c);
      wsum += wy[a] * wx[b];
    }
  }
  if (!(wsum > 0.0)) return std::nullopt;
  return sum / wsum;
}

FeatureVector build_features(const ingest::StationMeta& station, Instant t, double ssi) {
  const auto pos = solargeo::solar_position(station.lat, station.lon, t);
  const double hod = 2.0 * std::numbers::pi * utc_hours(t) / 24.0;
  const double doy = 2.0 * std::numbers::pi * double(day_of_year(t)) / 365.25;
  return {ssi, pos.sza, pos.azi, std::sin(hod), std::cos(hod), std::sin(doy), std::cos(doy)};
}

std::string model_to_json(const StationPowerModel& m) {
  json j;
  j["format"] = "rampcast-gbrt-1";
  j["station_id"] = m.station_id;
  j["p95_kw"] = m.p95_kw;
  j["base_score"] = m.base_score;
  j["features"] = FeatureVector::names();
  j["hyper"] = {{"trees", m.hyper.trees},
                {"max_depth", m.hyper.max_depth},
                {"learning_rate", m.hyper.learning_rate},
                {"subsample", m.hyper.subsample},
                {"patience", m.hyper.patience},
                {"seed", m.hyper.seed},
                {"lambda", m.hyper.lambda},
                {"min_child_weight", m.hyper.min_child_weight},
                {"max_bins", m.hyper.max_bins},
                {"validation_fraction", m.hyper.validation_fraction}};
  j["summary"] = {{"samples", m.summary.samples},
                  {"train_samples", m.summary.train_samples},
                  {"validation_samples", m.summary.validation_samples},
                  {"daytime_samples", m.summary.daytime_samples},
                  {"train_nrmse", m.summary.train_nrmse},
                  {"validation_nrmse", m.summary.validation_nrmse},
                  {"best_iteration", m.summary.best_iteration}};
  json trees = json::array();
  for (const auto& t : m.trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}});
  }
  j["trees"] = std::move(trees);
  return j.dump(1);
}

StationPowerModel model_from_json(const std::string& text) {
  StationPowerModel m;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "rampcast-gbrt-1") fail(Errc::ParseError, "unknown model format");
    m.station_id = j.at("station_id").get<std::string>();
    m.p95_kw = j.at("p95_kw").get<double>();
    m.base_score = j.at("base_score").get<double>();
    const auto& h = j.at("hyper");
    m.hyper.trees = h.at("trees").get<int>();
    m.hyper.max_depth = h.at("max_depth").get<int>();
    m.hyper.learning_rate = h.at("learning_rate").get<double>();
    m.hyper.subsample = h.at("subsample").get<double>();
    m.hyper.patience = h.at("patience").get<int>();
    m.hyper.seed = h.at("seed").get<std::uint64_t>();
    m.hyper.lambda = h.value("lambda", m.hyper.lambda);
    m.hyper.min_child_weight = h.value("min_child_weight", m.hyper.min_child_weight);
    m.hyper.max_bins = h.value("max_bins", m.hyper.max_bins);
    m.hyper.validation_fraction = h.value("validation_fraction", m.hyper.validation_fraction);
    const auto& s = j.at("summary");
    m.summary.samples = s.at("samples").get<std::size_t>();
    m.summary.train_samples = s.at("train_samples").get<std::size_t>();
    m.summary.validation_samples = s.at("validation_samples").get<std::size_t>();
    m.summary.daytime_samples = s.value("daytime_samples", std::size_t{0});
    m.summary.train_nrmse = s.at("train_nrmse").get<double>();
    m.summary.validation_nrmse = s.at("validation_nrmse").get<double>();
    m.summary.best_iteration = s.at("best_iteration").get<int>();
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      const auto& f = t.at("feature");
      const std::size_t n = f.size();
      if (t.at("threshold").size() != n || t.at("left").size() != n || t.at("right").size() != n ||
          t.at("value").size() != n || n == 0)
        fail(Errc::ParseError, "tree arrays differ in length");
      tree.nodes.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto& node = tree.nodes[i];
        node.feature = f[i].get<int>();
        node.threshold = t["threshold"][i].get<double>();
        node.left = t["left"][i].get<int>();
        node.right = t["right"][i].get<int>();
        node.value = t["value"][i].get<double>();
        if (node.feature >= int(kFeatureCount) ||
            (node.feature >= 0 && (node.left <= int(i) || node.right <= int(i) || node.left >= int(n) || node.right >= int(n))))
          fail(Errc::ParseError, "malformed tree node");
      }
      m.trees.push_back(std::move(tree));
    }
  } catch (const json::exception& e) {
    fail(Errc::ParseError, std::string("model JSON: ") + e.what());
  }
  return m;
}

void save_model(const std::filesystem::path& dir, const StationPowerModel& model) {
  std::filesystem::create_directories(dir);
  const auto path = dir / (model.station_id + ".json");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  out << model_to_json(model) << '\n';
}

StationPowerModel load_model(const std::filesystem::path& dir, const std::string& station_id) {
  const auto path = dir / (station_id + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::MissingModel, "no model for station " + station_id + " at " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

PowerForecast convert_forecast(const nowcast::EnsembleForecast& fc, std::span<const ingest::StationMeta> stations,
                               const std::map<std::string, StationPowerModel>& models) {
  if (fc.kind != ingest::FieldKind::SSI) fail(Errc::WrongKind, "power conversion expects an SSI forecast");
  std::vector<const StationPowerModel*> mp(stations.size());
  for (std::size_t s = 0; s < stations.size(); ++s) {
    const auto it = models.find(stations[s].id);
    if (it == models.end()) fail(Errc::MissingModel, "no power model for station " + stations[s].id);
    mp[s] = &it->second;
  }
  PowerForecast out;
  out.init_time = fc.init_time;
  out.lead_minutes = fc.lead_minutes;
  out.members = fc.ensemble_size();
  for (const auto& st : stations) out.station_ids.push_back(st.id);
  const std::size_t L = fc.leads(), S = stations.size();
  out.power_kw.assign(out.members * L * S, std::numeric_limits<double>::quiet_NaN());

  // Sun geometry depends only on (lead, station); members differ only in irradiance.
  std::vector<FeatureVector> base(L * S);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t s = 0; s < S; ++s)
      base[l * S + s] = build_features(stations[s], fc.init_time + std::chrono::minutes{fc.lead_minutes[l]}, 0.0);

  parallel_for(out.members, [&](std::size_t m) {
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t s = 0; s < S; ++s) {
        const auto ssi = interpolate_to_station(fc.at(m, l), stations[s].lat, stations[s].lon);
        if (!ssi) continue;
        FeatureVector f = base[l * S + s];
        f.ssi = *ssi;
        out.power_kw[(m * L + l) * S + s] = predict_power(*mp[s], f);
      }
  });
  return out;
}

}  // namespace rampcast::power
