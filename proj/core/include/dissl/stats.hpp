#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace dissl::stats {

/// One-sample Kolmogorov-Smirnov statistic of `samples` against `cdf`.
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);

/// Asymptotic two-sided p-value for a KS statistic at sample size n.
double ks_pvalue(double statistic, std::size_t n);

double ks_statistic_uniform01(std::vector<double> samples);
double ks_statistic_std_normal(std::vector<double> samples);

/// Upper-tail p-value of a chi-squared statistic.
double chi2_pvalue(double statistic, int dof);

/// Pearson correlation of two equal-length vectors.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Max |pairwise Pearson correlation| across distinct columns.
double max_abs_offdiag_correlation(const Eigen::MatrixXd& m);

}  // namespace dissl::stats
