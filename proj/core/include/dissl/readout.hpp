#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dissl/mlp.hpp"

namespace dissl::trainkit {

using IntVec = Eigen::VectorXi;

/// 1 - SS_res / SS_tot per target dimension; NaN where the target has zero
/// variance.
Vec r2_per_dim(const Mat& predictions, const Mat& targets);
/// Mean over dimensions, ignoring NaN entries (0 if all are NaN).
double r2(const Mat& predictions, const Mat& targets);

/// Accuracy-normalized pseudo-r2 for categorical targets: 0 at chance
/// (1/num_classes), 1 at perfect accuracy.
double pseudo_r2(const IntVec& predictions, const IntVec& targets,
                 int num_classes);

/// Regularized least squares on standardized features.
struct RidgeReadout {
  Mat w;  // targets x features
  Vec b;
  Vec feat_mean, feat_scale;

  Mat predict(const Mat& features) const;
};
RidgeReadout fit_ridge(const Mat& features, const Mat& targets,
                       double alpha = 1e-3);

/// RBF kernel ridge with median-heuristic bandwidth, fit on at most
/// `max_anchors` rows (evenly subsampled).
struct KernelRidgeReadout {
  Mat anchors;  // standardized
  Mat coef;     // anchors x targets
  double gamma = 1.0;
  Vec feat_mean, feat_scale;

  Mat predict(const Mat& features) const;
};
KernelRidgeReadout fit_kernel_ridge(const Mat& features, const Mat& targets,
                                    double ridge = 1e-6,
                                    int max_anchors = 2000);

/// Multinomial linear classifier trained by full-batch Adam.
struct LogisticReadout {
  Mat w;  // classes x features
  Vec b;
  Vec feat_mean, feat_scale;
  int num_classes = 0;

  IntVec predict(const Mat& features) const;
};
LogisticReadout fit_logistic(const Mat& features, const IntVec& labels,
                             int num_classes, int iterations = 300,
                             double lr = 0.05, double l2 = 1e-4);

/// Convenience: linear or kernel-ridge fit plus held-out r2 in one call.
double readout_r2(const Mat& train_x, const Mat& train_y, const Mat& test_x,
                  const Mat& test_y, bool nonlinear);
double readout_pseudo_r2(const Mat& train_x, const IntVec& train_y,
                         const Mat& test_x, const IntVec& test_y,
                         int num_classes);

}  // namespace dissl::trainkit
