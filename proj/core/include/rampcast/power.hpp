#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rampcast/ingest.hpp"
#include "rampcast/nowcast.hpp"

namespace rampcast::power {

inline constexpr std::size_t kFeatureCount = 7;

/// Seven predictors: irradiance, sun geometry and cyclical time encodings.
struct FeatureVector {
  double ssi = 0.0;  // W/m2
  double sza = 0.0;  // degrees
  double azi = 0.0;  // degrees
  double hod_sin = 0.0, hod_cos = 1.0;
  double doy_sin = 0.0, doy_cos = 1.0;

  std::array<double, kFeatureCount> as_array() const noexcept {
    return {ssi, sza, azi, hod_sin, hod_cos, doy_sin, doy_cos};
  }
  static const std::array<std::string, kFeatureCount>& names();
};

/// Bilinear interpolation between the 4 surrounding cell centers. Masked neighbours are
/// dropped and the remaining weights renormalized; nullopt when all are masked.
/// Throws OutOfDomain outside the hull of cell centers.
std::optional<double> interpolate_to_station(const ingest::RasterField& field, double lat, double lon);

/// Hour of day uses fractional UTC hours (period 24 h); day of year is the 1-based
/// ordinal with period 365.25 days.
FeatureVector build_features(const ingest::StationMeta& station, Instant t, double ssi);

struct GbrtConfig {
  int trees = 300;
  int max_depth = 6;
  double learning_rate = 0.1;
  double subsample = 0.8;
  int patience = 20;
  std::uint64_t seed = 42;
  double lambda = 1.0;           // L2 penalty on leaf values
  double min_child_weight = 1.0;  // minimum samples per leaf (unit hessians)
  int max_bins = 255;
  double validation_fraction = 0.2;
  std::size_t min_daytime_samples = 500;
  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x < threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, already scaled by the learning rate
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> x) const noexcept;
  std::size_t depth() const;
};

struct TrainingSummary {
  std::size_t samples = 0;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
  std::size_t daytime_samples = 0;
  double train_nrmse = 0.0;
  double validation_nrmse = 0.0;
  int best_iteration = 0;  // number of trees kept
};

struct StationPowerModel {
  std::string station_id;
  double p95_kw = 0.0;
  double base_score = 0.0;
  std::vector<RegressionTree> trees;
  GbrtConfig hyper;
  TrainingSummary summary;

  /// Unclipped ensemble output.
  double raw(const FeatureVector& f) const noexcept;
};

/// Gradient-boosted regression trees (squared loss, histogram splits). Samples must be in
/// chronological order: the first 80% train, the last 20% drive early stopping.
/// Throws InsufficientData below `min_daytime_samples` samples with sza < 90.
StationPowerModel train_station_model(const std::string& station_id, std::span<const FeatureVector> features,
                                      std::span<const double> targets_kw, double p95_kw, const GbrtConfig& hyper = {});

/// Ensemble prediction clipped to >= 0.
double predict_power(const StationPowerModel& model, const FeatureVector& f) noexcept;

std::string model_to_json(const StationPowerModel& model);
StationPowerModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& dir, const StationPowerModel& model);  // <dir>/<id>.json
StationPowerModel load_model(const std::filesystem::path& dir, const std::string& station_id);

/// Power per (member, lead, station); NaN where the interpolated irradiance was masked.
struct PowerForecast {
  Instant init_time{};
  std::vector<int> lead_minutes;
  std::vector<std::string> station_ids;
  std::size_t members = 0;
  std::vector<double> power_kw;  // [member][lead][station]

  std::size_t leads() const noexcept { return lead_minutes.size(); }
  std::size_t stations() const noexcept { return station_ids.size(); }
  double at(std::size_t member, std::size_t lead, std::size_t station) const {
    return power_kw.at((member * leads() + lead) * stations() + station);
  }
  bool valid(std::size_t member, std::size_t lead, std::size_t station) const {
    return !std::isnan(at(member, lead, station));
  }
};

/// Throws WrongKind unless the forecast is SSI and MissingModel for a station without a model.
PowerForecast convert_forecast(const nowcast::EnsembleForecast& fc, std::span<const ingest::StationMeta> stations,
                               const std::map<std::string, StationPowerModel>& models);

}  // namespace rampcast::power
