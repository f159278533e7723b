#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dissl/trainkit.hpp"

namespace dissl::expcli {

/// Name of the environment variable overriding the configured seed list with
/// a single global seed.
inline constexpr const char* kSeedEnvVar = "DISSL_SEED";

/// Parsed experiment configuration with every default resolved, so the echoed
/// copy in the output directory documents all effective hyperparameters.
struct ExperimentConfig {
  std::string experiment;  // numerical-fig2 | sprites-table2 | multispace-m2
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::string out_dir = "runs/out";

  // sweep axes (used per experiment)
  std::vector<int> dims{5, 10};                          // numerical-fig2
  std::vector<std::string> strengths{"weak", "medium", "strong"};
  std::vector<std::string> lambda_modes{"fixed", "adapted"};
  std::vector<std::string> families{"simclr"};

  // training settings (experiment-specific defaults filled by resolve())
  int steps = -1;
  int batch_size = -1;
  double lr = 1e-3;
  std::vector<int> hidden;
  int repr_dim = -1;
  std::vector<int> space_dims;  // fig2: single entry, replaced by the swept dim
  double eta = 0.05;
  double epsilon = 0.01;
  int cadence = 10;

  // data settings
  int dataset_size = 50000;  // sprite experiments
  int stride = 2;
  // depth 2 is the smallest genuinely nonlinear mixing (one hidden
  // nonlinearity); deeper mixings push the readout's sample complexity past
  // what the evaluation split supports
  int mixing_depth = 2;
  int eval_train = -1;
  int eval_test = -1;

  /// Fill experiment-specific defaults for every field still at sentinel.
  void resolve();
  void validate() const;

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
};

struct ResultRow {
  std::map<std::string, std::string> key;  // e.g. {dim, lambda, seed}
  std::map<std::string, double> values;
  bool ok = false;
  std::string error;
};

struct ResultTable {
  std::vector<std::string> key_columns;
  std::vector<std::string> value_columns;  // includes the average column
  std::string avg_column;                  // recomputed on emission
  std::vector<std::string> avg_of;
  std::vector<ResultRow> rows;

  bool complete() const;
  std::string to_json() const;
  static ResultTable from_json(const std::string& text);
};

/// CSV/markdown emission with deterministic column order; recomputes the
/// average column from its inputs and requires agreement to 1e-9. Refuses an
/// incomplete grid unless allow_partial.
std::string emit_table(const ResultTable& table, const std::string& format,
                       bool allow_partial = false);

/// Mean +- sd across seeds for every value column, grouped by the remaining
/// key columns.
std::string aggregate_csv(const ResultTable& table);

/// SVG line plot (r2 against embedding dim, one curve per lambda mode and
/// target) for the numerical experiment.
std::string fig2_plot_svg(const ResultTable& table);

/// Executes the full grid with up to `jobs` worker processes and persists
/// per-cell checkpoints, histories and reports plus the aggregate artifacts
/// under config.out_dir. Failed cells are marked and do not stop the grid.
ResultTable run_experiment(const ExperimentConfig& config, int jobs = 1);

/// Reads a persisted run directory back into a table.
ResultTable load_results(const std::string& run_dir);

}  // namespace dissl::expcli
