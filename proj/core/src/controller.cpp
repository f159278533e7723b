#include "dissl/controller.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dissl::controller {

LambdaState LambdaState::standard(int num_spaces) {
  LambdaState s;
  s.lambdas.assign(num_spaces, 1.0);
  return s;
}

void LambdaState::validate() const {
  if (lambdas.empty()) throw std::invalid_argument("lambda state: empty");
  for (double l : lambdas)
    if (!(l > 0.0)) throw std::invalid_argument("lambda state: lambdas > 0");
  if (!(eta > 0.0)) throw std::invalid_argument("lambda state: eta > 0");
  if (epsilon < 0.0) throw std::invalid_argument("lambda state: epsilon >= 0");
  if (cadence < 1) throw std::invalid_argument("lambda state: cadence >= 1");
}

LambdaState update_lambda(const LambdaState& state,
                          const std::vector<double>& invariance_values,
                          long step) {
  state.validate();
  if (invariance_values.size() != state.lambdas.size())
    throw std::invalid_argument("update_lambda: need one reading per space");
  for (double v : invariance_values)
    if (!std::isfinite(v))
      throw std::runtime_error("update_lambda: non-finite invariance reading");

  LambdaState next = state;
  for (std::size_t m = 0; m < next.lambdas.size(); ++m)
    next.lambdas[m] += next.eta * std::max(0.0, invariance_values[m] - next.epsilon);
  next.history.push_back(
      {step >= 0 ? step : static_cast<long>(state.history.size()),
       next.lambdas, invariance_values});
  return next;
}

bool is_converged(const LambdaState& state, int window) {
  if (window < 1) throw std::invalid_argument("is_converged: window >= 1");
  if (static_cast<int>(state.history.size()) < window) return false;
  for (std::size_t i = state.history.size() - window; i < state.history.size();
       ++i)
    for (double v : state.history[i].invariance)
      if (v > state.epsilon) return false;
  return true;
}

std::string history_csv(const LambdaState& state) {
  std::ostringstream out;
  out << "step";
  for (std::size_t m = 0; m < state.lambdas.size(); ++m)
    out << ",lambda_" << m;
  for (std::size_t m = 0; m < state.lambdas.size(); ++m) out << ",inv_" << m;
  out << '\n';
  out.precision(12);
  for (const auto& e : state.history) {
    out << e.step;
    for (double l : e.lambdas) out << ',' << l;
    for (double v : e.invariance) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace dissl::controller
