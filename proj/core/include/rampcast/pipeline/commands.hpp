#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rampcast/error.hpp"
#include "rampcast/nowcast.hpp"
#include "rampcast/pipeline/config.hpp"
#include "rampcast/rampdetect.hpp"
#include "rampcast/verify.hpp"

namespace rampcast::pipeline {

/// 2 config error, 3 missing input, 4 data-integrity failure, 1 anything else.
int exit_code(Errc code) noexcept;

// Output layout below cfg.out_dir.
inline const std::string kThresholdFile = "threshold.json";
inline const std::string kDailyCsiFile = "daily_csi.csv";
inline const std::string kRampDir = "ramps";
inline const std::string kNowcastDir = "nowcast";
inline const std::string kPowerDir = "power";
inline const std::string kEvaluationDir = "evaluation";
inline const std::string kReportDir = "report";

void cmd_gen_synthetic(const PipelineConfig& cfg);
ramp::RampThreshold cmd_derive_threshold(const PipelineConfig& cfg);
std::vector<ramp::RampEvent> cmd_detect_ramps(const PipelineConfig& cfg);
/// Runs the named models (all configured models when empty) over the init schedule.
void cmd_nowcast(const PipelineConfig& cfg, const std::vector<std::string>& models = {});
void cmd_train_power(const PipelineConfig& cfg);
void cmd_evaluate(const PipelineConfig& cfg);
void cmd_report(const PipelineConfig& cfg);

// --- shared stage I/O (also used by the test harness) -------------------------

/// Stations CSV loaded from cfg.stations (MissingInput when absent).
ingest::StationLoad load_stations(const PipelineConfig& cfg);

void write_threshold_json(const std::filesystem::path& path, const ramp::RampThreshold& thr, const PipelineConfig& cfg);
ramp::RampThreshold read_threshold_json(const std::filesystem::path& path);

void write_events_csv(std::ostream& out, std::span<const ramp::RampEvent> events);
std::vector<ramp::RampEvent> read_events_csv(const std::filesystem::path& path);

/// Scheduled inits covered by the archive (all four input frames present).
std::vector<Instant> archive_inits(const PipelineConfig& cfg);

/// Forecast archive `<root>/forecasts/<init>/m<e>/l<minutes>.f32` with a manifest per init.
void write_forecast(const std::filesystem::path& root, const nowcast::EnsembleForecast& fc,
                    const ingest::GridGeometry& geometry, const PipelineConfig& cfg, const std::string& model);
nowcast::EnsembleForecast read_forecast(const std::filesystem::path& root, Instant init);

struct ModelScores {
  std::string model;
  verify::ScoreData data;
};

/// Station power forecasts and observations on the (station, init, lead, member) grid.
ModelScores load_model_scores(const PipelineConfig& cfg, const std::string& model);

}  // namespace rampcast::pipeline
