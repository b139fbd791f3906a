// rampcast command-line driver.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rampcast/parallel.hpp"
#include "rampcast/pipeline/commands.hpp"

namespace rp = rampcast::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"rampcast: solar ramp detection, irradiance nowcasting and verification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> models;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-synthetic", "write a synthetic satellite archive, station fleet and truth sidecar"},
      {"derive-threshold", "derive the clear-sky ramp threshold"},
      {"detect-ramps", "detect ramp events and export histograms"},
      {"nowcast", "run nowcast models over the init schedule"},
      {"train-power", "train per-station irradiance-to-power models"},
      {"evaluate", "score forecasts on ramp and matched nonramp cases"},
      {"report", "render SVG panels from exported CSVs"},
  };
  std::vector<CLI::App*> subs;
  std::vector<CLI::Option*> seed_opts, out_opts, config_opts;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    config_opts.push_back(sub->add_option("--config", config_path, "JSON config file"));
    out_opts.push_back(sub->add_option("--out", out_dir, "output directory"));
    sub->add_option("--jobs", jobs, "worker threads (0 = all cores)");
    seed_opts.push_back(sub->add_option("--seed", seed, "master seed"));
    if (name == "nowcast") sub->add_option("--model", models, "persistence, advection or steps (repeatable)");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  rampcast::set_default_jobs(jobs);
  rp::Overrides overrides;
  std::optional<std::filesystem::path> file;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    if (*config_opts[i]) file = config_path;
    if (*out_opts[i]) overrides.out_dir = out_dir;
    if (*seed_opts[i]) overrides.seed = seed;
  }

  try {
    const auto cfg = rp::load_config(file, overrides);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "gen-synthetic") {
      rp::cmd_gen_synthetic(cfg);
    } else if (cmd == "derive-threshold") {
      const auto thr = rp::cmd_derive_threshold(cfg);
      std::cout << "delta_p_tr_mw " << thr.delta_p_tr_mw << " over " << thr.clearsky_days.size() << " clear-sky days\n";
    } else if (cmd == "detect-ramps") {
      std::cout << rp::cmd_detect_ramps(cfg).size() << " ramp events\n";
    } else if (cmd == "nowcast") {
      rp::cmd_nowcast(cfg, models);
    } else if (cmd == "train-power") {
      rp::cmd_train_power(cfg);
    } else if (cmd == "evaluate") {
      rp::cmd_evaluate(cfg);
    } else if (cmd == "report") {
      rp::cmd_report(cfg);
    }
  } catch (const rampcast::Error& e) {
    std::cerr << "rampcast: " << e.what() << '\n';
    return rp::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rampcast: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
