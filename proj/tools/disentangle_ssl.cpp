// Command-line front end: runs the built-in experiment grids, re-emits result
// tables from a finished run directory, and exports the sprite dataset.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dissl/experiment.hpp"
#include "dissl/spriteworld.hpp"

namespace {

int cmd_run(const std::string& config_file, int jobs, const std::string& out,
            bool allow_partial) {
  auto config = dissl::expcli::ExperimentConfig::from_file(config_file);
  if (!out.empty()) config.out_dir = out;
  if (const char* seed_env = std::getenv(dissl::expcli::kSeedEnvVar)) {
    config.seeds = {std::stoull(seed_env)};
    std::cerr << "seed list overridden by " << dissl::expcli::kSeedEnvVar
              << "=" << seed_env << "\n";
  }
  const auto table = dissl::expcli::run_experiment(config, jobs);
  std::cout << dissl::expcli::emit_table(table, "csv", allow_partial);
  if (!table.complete()) {
    int failed = 0;
    for (const auto& row : table.rows) failed += row.ok ? 0 : 1;
    std::cerr << failed << " of " << table.rows.size()
              << " grid cells failed\n";
    return 1;
  }
  return 0;
}

int cmd_report(const std::string& run_dir, const std::string& format,
               bool allow_partial) {
  const auto table = dissl::expcli::load_results(run_dir);
  std::cout << dissl::expcli::emit_table(table, format, allow_partial);
  return table.complete() ? 0 : 1;
}

int cmd_export(const std::string& dir, int n, std::uint64_t seed) {
  dissl::RngStream rng(seed);
  const auto dataset = dissl::spriteworld::build_dataset(n, rng);
  std::filesystem::create_directories(dir);
  dissl::spriteworld::export_dataset(dir, dataset);
  std::cout << "wrote " << n << " images to " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured-augmentation SSL experiments"};
  app.require_subcommand(1);

  std::string config_file, out_dir, run_dir, format = "csv", export_dir;
  int jobs = 1, export_n = 1000;
  std::uint64_t export_seed = 0;
  bool allow_partial = false;

  auto* run = app.add_subcommand("run", "execute an experiment grid");
  run->add_option("config-file", config_file, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--jobs", jobs, "max concurrent worker processes")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory override");
  run->add_flag("--allow-partial", allow_partial,
                "emit the table even if some cells failed");

  auto* report = app.add_subcommand("report", "re-emit a run's result table");
  report->add_option("run-dir", run_dir, "finished run directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  report->add_option("--format", format, "csv or markdown")
      ->check(CLI::IsMember({"csv", "markdown"}));
  report->add_flag("--allow-partial", allow_partial,
                   "emit even if some cells failed");

  auto* exp = app.add_subcommand("export-dataset",
                                 "write the sprite dataset to disk");
  exp->add_option("dir", export_dir, "target directory")->required();
  exp->add_option("--n", export_n, "number of images")
      ->check(CLI::PositiveNumber);
  exp->add_option("--seed", export_seed, "sampling seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_file, jobs, out_dir, allow_partial);
    if (report->parsed()) return cmd_report(run_dir, format, allow_partial);
    return cmd_export(export_dir, export_n, export_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
