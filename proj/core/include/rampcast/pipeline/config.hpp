#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rampcast/ingest.hpp"
#include "rampcast/nowcast.hpp"
#include "rampcast/power.hpp"
#include "rampcast/rampdetect.hpp"
#include "rampcast/solargeo.hpp"
#include "rampcast/verify.hpp"

namespace rampcast::pipeline {

enum class SceneKind { Advection, Dissipation, FogClearing, ClearSky };
std::string to_string(SceneKind kind);
SceneKind parse_scene_kind(const std::string& text);

/// Everything gen-synthetic needs; together with `seed` it fully determines the output.
struct SyntheticScenario {
  SceneKind kind = SceneKind::Advection;
  /// Per-day kinds cycled over the non-clear days; empty means `kind` every day.
  std::vector<SceneKind> day_cycle;
  /// Share of days forced fully clear (rounded down). Ignored for the clear_sky kind.
  double clear_day_fraction = 0.0;

  CivilDate start{std::chrono::year{2021}, std::chrono::June, std::chrono::day{1}};
  int days = 10;
  ingest::GridGeometry grid{47.2, 7.0, 0.02, 0.03, 64, 64};

  // motion in px per 15-min step; u eastward (columns), v southward (rows)
  double motion_u = 1.0;
  double motion_v = 0.0;
  bool random_motion = false;  // per-day direction and speed in [speed_min, speed_max]
  double speed_min = 0.5;
  double speed_max = 3.0;

  // background cumulus: Gaussian CSI dips
  int blobs = 12;
  double blob_sigma_min_px = 3.0;
  double blob_sigma_max_px = 8.0;
  double blob_depth_min = 0.05;
  double blob_depth_max = 0.25;

  // planted structures
  double deck_depth = 0.85;        // advection: stratiform front, CSI drop behind the edge
  double deck_edge_px = 1.5;       // logistic edge width
  double tau0 = 4.0;               // dissipation/fog: initial optical depth
  double halving_minutes = 60.0;   // optical depth halves every this many minutes after onset
  double fog_radius_px = 14.0;

  // fleet
  int stations = 20;
  double cluster_px = 0.0;  // 0: stations anywhere in the interior; >0: square cluster around the center
  double capacity_min_kw = 500.0;
  double capacity_max_kw = 3000.0;
  double noise_fraction = 0.01;  // additive daytime noise std as a share of capacity
  double dropout_fraction = 0.0;  // share of stations that go silent for one block per day
  int dropout_steps = 8;

  std::uint64_t seed = 7;

  void validate() const;
};

struct RampSettings {
  double percentile = 90.0;
  ramp::PairFilter filter{};
  double min_coverage = 0.9;
  ramp::HexbinConfig hexbin{};
};

struct NowcastSettings {
  int levels = 6;
  int ensemble_size = 10;
  double sigma_speed = 0.15;
  double sigma_dir = 10.0;  // degrees
  int leads = 8;
  nowcast::LucasKanadeConfig lk{};
  double cascade_width = 0.35;
  std::uint64_t seed = 0;
  std::vector<std::string> models{"persistence", "advection", "steps"};
  bool downsample = false;     // 2x2 block mean before nowcasting
  std::size_t max_inits = 0;   // 0: every scheduled init
};

/// Resolved configuration. Relative paths are resolved against `out_dir`.
struct PipelineConfig {
  std::filesystem::path out_dir = ".";
  std::filesystem::path satellite;  // raster archive root (SSI)
  std::filesystem::path stations;   // station CSV
  std::filesystem::path models;     // model store
  std::filesystem::path truth;      // generator sidecar (written, never read by commands)

  std::optional<ramp::ReferencePoint> reference;  // default: domain centroid
  solargeo::ClearSkyConfig clearsky{};
  RampSettings ramp{};
  NowcastSettings nowcast{};
  power::GbrtConfig power{};
  verify::CaseWindow window{};
  SyntheticScenario synthetic{};

  std::uint64_t seed = 1;
  std::string canonical_json;  // normalized config the hash is computed from
  std::string config_hash;     // 16 hex digits

  /// Named seeds actually used by the stages.
  std::map<std::string, std::uint64_t> seeds() const;
  std::filesystem::path path(const std::string& relative) const { return out_dir / relative; }
};

struct Overrides {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
};

/// Parses JSON text (may be empty for all defaults). Unknown keys are rejected.
/// Throws ConfigError.
PipelineConfig parse_config(const std::string& json_text, const Overrides& overrides = {});
/// Missing file raises MissingInput.
PipelineConfig load_config(const std::optional<std::filesystem::path>& file, const Overrides& overrides = {});

/// Reference point from config, else the centroid of the grid.
ramp::ReferencePoint reference_point(const PipelineConfig& cfg, const ingest::GridGeometry& grid);

/// "# rampcast config_hash=... seeds=name:value,..." line for CSV artifacts.
std::string metadata_comment(const PipelineConfig& cfg);

/// FNV-1a 64 as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace rampcast::pipeline
