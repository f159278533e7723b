#include "dissl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace dissl::stats {

double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double ks_pvalue(double statistic, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term =
        (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_statistic_uniform01(std::vector<double> samples) {
  return ks_statistic(std::move(samples), [](double x) {
    return std::clamp(x, 0.0, 1.0);
  });
}

double ks_statistic_std_normal(std::vector<double> samples) {
  return ks_statistic(std::move(samples), [](double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
  });
}

double chi2_pvalue(double statistic, int dof) {
  if (dof < 1) throw std::invalid_argument("chi2: dof >= 1 required");
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("pearson: need equal lengths >= 2");
  const Eigen::VectorXd ac = a.array() - a.mean();
  const Eigen::VectorXd bc = b.array() - b.mean();
  const double denom = ac.norm() * bc.norm();
  if (denom == 0.0) return 0.0;
  return ac.dot(bc) / denom;
}

double max_abs_offdiag_correlation(const Eigen::MatrixXd& m) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index k = j + 1; k < m.cols(); ++k)
      best = std::max(best, std::abs(pearson(m.col(j), m.col(k))));
  return best;
}

}  // namespace dissl::stats
