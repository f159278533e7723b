#pragma once

#include <string>
#include <vector>

namespace dissl::controller {

/// Dual-ascent state for the invariance weights. Lambdas only ever increase:
/// lambda_m <- lambda_m + eta * max(0, L^inv_m - epsilon).
struct LambdaState {
  std::vector<double> lambdas;
  double eta = 0.05;
  double epsilon = 0.01;
  int cadence = 10;  // inner steps per outer update

  struct HistoryEntry {
    long step = 0;
    std::vector<double> lambdas;
    std::vector<double> invariance;
  };
  std::vector<HistoryEntry> history;

  static LambdaState standard(int num_spaces);

  void validate() const;  // throws std::invalid_argument
};

/// One outer update; records (step, lambda, invariance) in the history.
/// Throws std::runtime_error on non-finite invariance readings.
LambdaState update_lambda(const LambdaState& state,
                          const std::vector<double>& invariance_values,
                          long step = -1);

/// True iff every invariance reading in the trailing `window` history entries
/// is <= epsilon in every component (false while fewer entries exist).
bool is_converged(const LambdaState& state, int window);

/// CSV export: step, lambda_0.., inv_0..
std::string history_csv(const LambdaState& state);

}  // namespace dissl::controller
