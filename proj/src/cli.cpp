#include "afbs/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "afbs/experiment.hpp"

namespace afbs::cli {
namespace {

namespace fs = std::filesystem;

// Runs `body`, mapping the error taxonomy to exit codes.
template <typename Fn>
int guarded(Fn&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("run failed: {}", e.what());
    return kRuntimeError;
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create '{}': {}", dir, ec.message()));
}

void write_report(const RunReport& report, const fs::path& dir) {
  ensure_dir(dir.string());
  emit(report, (dir / "report.json").string(), ReportFormat::kJson);
  emit(report, (dir / "timeline.csv").string(), ReportFormat::kCsv);
  write_handle_times(report, (dir / "timing.json").string());
}

ExperimentConfig load_with_override(const std::string& path, std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = load_config(path);
  if (seed) cfg.seed = *seed;
  return cfg;
}

std::string format_time(std::optional<double> t) { return t ? fmt::format("{}", *t) : "-"; }

}  // namespace

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  const char* env = std::getenv("AFBS_LOG");
  if (env == nullptr) return;
  const std::string level(env);
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::warn("ignoring AFBS_LOG='{}' (expected error, info or debug)", level);
  }
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override) {
  return guarded([&] {
    const ExperimentConfig cfg = load_with_override(config_path, seed_override);
    const RunReport report = run_experiment(cfg);
    write_report(report, out_dir);
    spdlog::info("wrote {}/report.json and timeline.csv", out_dir);
    return kOk;
  });
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& strategies,
              const std::string& out_dir, std::optional<std::uint64_t> seed_override) {
  return guarded([&] {
    const ExperimentConfig cfg = load_with_override(config_path, seed_override);
    if (strategies.empty()) throw ConfigError("sweep needs at least one strategy");
    for (const auto& name : strategies) {
      StrategyConfig s = cfg.strategy;
      s.name = name;
      validate(s);
    }
    const Scenario sc = build_scenario(cfg);
    ensure_dir(out_dir);

    std::string summary = "strategy,best_accuracy,final_accuracy,aggregations,total_summations";
    for (double t : cfg.metrics.targets) summary += fmt::format(",time_to_{}", t);
    summary += ",dataset_checksum\n";

    for (const auto& name : strategies) {
      StrategyConfig s = cfg.strategy;
      s.name = name;
      auto strategy = make_strategy(s, sc.assignment);
      const RunReport report = run_simulation(sc, *strategy);
      write_report(report, fs::path(out_dir) / name);
      summary += fmt::format("{},{},{},{},{}", name, report.best_accuracy(),
                             report.final_accuracy(), report.aggregations(),
                             report.total_summations());
      for (double t : cfg.metrics.targets) summary += "," + format_time(time_to_target(report, t));
      summary += fmt::format(",{:016x}\n", report.dataset_checksum);
    }
    const auto path = (fs::path(out_dir) / "summary.csv").string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << summary;
    if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path));
    return kOk;
  });
}

int cmd_export_data(const std::string& config_path, const std::string& out_path) {
  return guarded([&] {
    const ExperimentConfig cfg = load_config(config_path);
    // Same derivation as a run, so the exported data matches it.
    const Scenario sc = build_scenario(cfg);
    save_dataset_json(sc.dataset, out_path);
    return kOk;
  });
}

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Virtual-time simulator for semi-asynchronous federated learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override the config seed");

  std::vector<std::string> strategy_names;
  auto* sweep = app.add_subcommand("sweep", "Run several strategies on one scenario");
  sweep->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sweep->add_option("--strategies", strategy_names, "Comma-separated strategy names")
      ->delimiter(',')
      ->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--seed", seed, "Override the config seed");

  std::string data_out;
  auto* export_data = app.add_subcommand("export-data", "Write the generated dataset as JSON");
  export_data->add_option("--config", config_path, "Experiment config (JSON)")->required();
  export_data->add_option("--out", data_out, "Dataset JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*run) return cmd_run(config_path, out_dir, seed);
  if (*sweep) return cmd_sweep(config_path, strategy_names, out_dir, seed);
  return cmd_export_data(config_path, data_out);
}

}  // namespace afbs::cli
