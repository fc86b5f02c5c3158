// radint run <experiment_id> [--config FILE] [--out PATH] [--format csv|json] [--seed N]
// radint list
//
// Exit codes: 0 bounds hold, 1 bound violated, 2 configuration error,
// 3 I/O or numerical failure.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "radint/experiment.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitViolated = 1;
constexpr int kExitConfig = 2;
constexpr int kExitFailure = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rademacher interpolation experiments"};
  app.require_subcommand(1);

  std::string id;
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run one experiment and write its report");
  run->add_option("experiment_id", id, "experiment to run")->required();
  run->add_option("--config", config_path, "JSON configuration file");
  run->add_option("--out", out_path, "report path (stdout when omitted)");
  run->add_option("--format", format, "csv or json");
  run->add_option("--seed", seed, "overrides the configured seed");

  auto* list = app.add_subcommand("list", "list experiment ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  if (list->parsed()) {
    for (const auto& [k, name] : radint::experiment_names()) std::cout << name << '\n';
    return kExitPass;
  }

  radint::ExperimentConfig cfg;
  radint::ReportFormat fmt;
  try {
    const auto wanted = radint::parse_experiment_id(id);
    if (!config_path.empty()) {
      cfg = radint::load_config(config_path);
      if (cfg.experiment_id != wanted)
        throw radint::ConfigError("experiment_id", "config names '" + radint::to_string(cfg.experiment_id) +
                                                       "' but '" + id + "' was requested");
    }
    cfg.experiment_id = wanted;
    if (seed) cfg.seed = *seed;
    fmt = radint::parse_format(format);
    radint::validate(cfg);
  } catch (const radint::ConfigError& e) {
    std::cerr << "radint: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const auto report = radint::run_experiment(cfg);
    if (out_path.empty()) {
      std::cout << radint::render_report(report, fmt);
    } else {
      radint::emit_report(report, fmt, out_path);
    }
    std::cerr << report.experiment_id << ": ratio in [" << report.ratio_min << ", " << report.ratio_max << "] "
              << (report.pass ? "pass" : "bound violated") << '\n';
    return report.pass ? kExitPass : kExitViolated;
  } catch (const radint::ConfigError& e) {
    std::cerr << "radint: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "radint: " << e.what() << '\n';
    return kExitFailure;
  }
}
