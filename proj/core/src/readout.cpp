#include "dissl/readout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dissl::trainkit {

namespace {

void standardize_stats(const Mat& x, Vec& mean, Vec& scale) {
  mean = x.colwise().mean();
  const Mat xc = x.rowwise() - mean.transpose();
  scale = (xc.array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    if (scale[j] <= 0.0) scale[j] = 1.0;  // degenerate feature, left as-is
}

Mat apply_standardize(const Mat& x, const Vec& mean, const Vec& scale) {
  return (x.rowwise() - mean.transpose()).array().rowwise() /
         scale.transpose().array();
}

}  // namespace

Vec r2_per_dim(const Mat& predictions, const Mat& targets) {
  if (predictions.rows() != targets.rows() ||
      predictions.cols() != targets.cols())
    throw std::invalid_argument("r2: shape mismatch");
  if (targets.rows() < 2) throw std::invalid_argument("r2: need >= 2 samples");
  Vec out(targets.cols());
  for (Eigen::Index j = 0; j < targets.cols(); ++j) {
    const double mean = targets.col(j).mean();
    const double ss_tot = (targets.col(j).array() - mean).square().sum();
    const double ss_res =
        (targets.col(j) - predictions.col(j)).array().square().sum();
    out[j] = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot
                          : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double r2(const Mat& predictions, const Mat& targets) {
  const Vec per_dim = r2_per_dim(predictions, targets);
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index j = 0; j < per_dim.size(); ++j)
    if (!std::isnan(per_dim[j])) {
      sum += per_dim[j];
      ++count;
    }
  return count > 0 ? sum / count : 0.0;
}

double pseudo_r2(const IntVec& predictions, const IntVec& targets,
                 int num_classes) {
  if (predictions.size() != targets.size() || targets.size() == 0)
    throw std::invalid_argument("pseudo_r2: shape mismatch");
  if (num_classes < 2) throw std::invalid_argument("pseudo_r2: >= 2 classes");
  double correct = 0.0;
  for (Eigen::Index i = 0; i < targets.size(); ++i)
    if (predictions[i] == targets[i]) correct += 1.0;
  const double acc = correct / static_cast<double>(targets.size());
  const double chance = 1.0 / static_cast<double>(num_classes);
  return (acc - chance) / (1.0 - chance);
}

// ---- ridge ------------------------------------------------------------------

RidgeReadout fit_ridge(const Mat& features, const Mat& targets, double alpha) {
  if (features.rows() != targets.rows())
    throw std::invalid_argument("fit_ridge: row mismatch");
  RidgeReadout r;
  standardize_stats(features, r.feat_mean, r.feat_scale);
  const Mat x = apply_standardize(features, r.feat_mean, r.feat_scale);
  const Vec y_mean = targets.colwise().mean();
  const Mat yc = targets.rowwise() - y_mean.transpose();
  const Eigen::Index d = x.cols();
  const Mat gram =
      x.transpose() * x + alpha * static_cast<double>(x.rows()) *
                              Mat::Identity(d, d);
  r.w = gram.ldlt().solve(x.transpose() * yc).transpose();
  r.b = y_mean;
  return r;
}

Mat RidgeReadout::predict(const Mat& features) const {
  const Mat x = apply_standardize(features, feat_mean, feat_scale);
  return (x * w.transpose()).rowwise() + b.transpose();
}

// ---- kernel ridge -----------------------------------------------------------

namespace {

Mat rbf_kernel(const Mat& a, const Mat& b, double gamma) {
  const Vec a2 = a.rowwise().squaredNorm();
  const Vec b2 = b.rowwise().squaredNorm();
  Mat d2 = (-2.0 * a * b.transpose());
  d2.colwise() += a2;
  d2.rowwise() += b2.transpose();
  return (-gamma * d2.array().max(0.0)).exp();
}

double median_sq_distance(const Mat& x) {
  const Eigen::Index n = std::min<Eigen::Index>(x.rows(), 500);
  std::vector<double> d2;
  d2.reserve(n * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      d2.push_back((x.row(i) - x.row(j)).squaredNorm());
  if (d2.empty()) return 1.0;
  std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
  const double med = d2[d2.size() / 2];
  return med > 0.0 ? med : 1.0;
}

}  // namespace

KernelRidgeReadout fit_kernel_ridge(const Mat& features, const Mat& targets,
                                    double ridge, int max_anchors) {
  if (features.rows() != targets.rows())
    throw std::invalid_argument("fit_kernel_ridge: row mismatch");
  KernelRidgeReadout r;
  standardize_stats(features, r.feat_mean, r.feat_scale);
  Mat x = apply_standardize(features, r.feat_mean, r.feat_scale);
  Mat y = targets;
  if (x.rows() > max_anchors) {
    // even subsample keeps the fit O(max_anchors^3)
    Mat xs(max_anchors, x.cols());
    Mat ys(max_anchors, y.cols());
    for (int i = 0; i < max_anchors; ++i) {
      const Eigen::Index src =
          static_cast<Eigen::Index>(static_cast<double>(i) * x.rows() /
                                    max_anchors);
      xs.row(i) = x.row(src);
      ys.row(i) = y.row(src);
    }
    x = std::move(xs);
    y = std::move(ys);
  }
  r.gamma = 1.0 / (2.0 * median_sq_distance(x));  // median heuristic
  r.anchors = x;
  Mat k = rbf_kernel(x, x, r.gamma);
  k.diagonal().array() += ridge * static_cast<double>(x.rows());
  r.coef = k.ldlt().solve(y);
  return r;
}

Mat KernelRidgeReadout::predict(const Mat& features) const {
  const Mat x = apply_standardize(features, feat_mean, feat_scale);
  return rbf_kernel(x, anchors, gamma) * coef;
}

// ---- multinomial logistic ---------------------------------------------------

LogisticReadout fit_logistic(const Mat& features, const IntVec& labels,
                             int num_classes, int iterations, double lr,
                             double l2) {
  if (features.rows() != labels.size())
    throw std::invalid_argument("fit_logistic: row mismatch");
  LogisticReadout r;
  r.num_classes = num_classes;
  standardize_stats(features, r.feat_mean, r.feat_scale);
  const Mat x = apply_standardize(features, r.feat_mean, r.feat_scale);
  const Eigen::Index n = x.rows(), d = x.cols();
  r.w = Mat::Zero(num_classes, d);
  r.b = Vec::Zero(num_classes);

  Mat onehot = Mat::Zero(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("fit_logistic: label out of range");
    onehot(i, y) = 1.0;
  }

  Mat mw = Mat::Zero(num_classes, d), vw = mw;
  Vec mb = Vec::Zero(num_classes), vb = mb;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= iterations; ++t) {
    Mat logits = (x * r.w.transpose()).rowwise() + r.b.transpose();
    logits.colwise() -= logits.rowwise().maxCoeff();
    Mat p = logits.array().exp();
    p.array().colwise() /= p.rowwise().sum().array();
    const Mat delta = (p - onehot) / static_cast<double>(n);
    const Mat gw = delta.transpose() * x + l2 * r.w;
    const Vec gb = delta.colwise().sum().transpose();

    const double bc1 = 1.0 - std::pow(b1, t), bc2 = 1.0 - std::pow(b2, t);
    mw = b1 * mw + (1 - b1) * gw;
    vw = (b2 * vw.array() + (1 - b2) * gw.array().square()).matrix();
    mb = b1 * mb + (1 - b1) * gb;
    vb = (b2 * vb.array() + (1 - b2) * gb.array().square()).matrix();
    r.w.array() -= lr * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + eps);
    r.b.array() -= lr * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + eps);
  }
  return r;
}

IntVec LogisticReadout::predict(const Mat& features) const {
  const Mat x = apply_standardize(features, feat_mean, feat_scale);
  const Mat logits = (x * w.transpose()).rowwise() + b.transpose();
  IntVec out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best;
    logits.row(i).maxCoeff(&best);
    out[i] = static_cast<int>(best);
  }
  return out;
}

// ---- helpers ----------------------------------------------------------------

double readout_r2(const Mat& train_x, const Mat& train_y, const Mat& test_x,
                  const Mat& test_y, bool nonlinear) {
  if (train_x.rows() < 10 * train_y.cols())
    throw std::invalid_argument("readout: need >= 10 * target-dim samples");
  if (nonlinear) {
    const auto model = fit_kernel_ridge(train_x, train_y);
    return r2(model.predict(test_x), test_y);
  }
  const auto model = fit_ridge(train_x, train_y);
  return r2(model.predict(test_x), test_y);
}

double readout_pseudo_r2(const Mat& train_x, const IntVec& train_y,
                         const Mat& test_x, const IntVec& test_y,
                         int num_classes) {
  const auto model = fit_logistic(train_x, train_y, num_classes);
  return pseudo_r2(model.predict(test_x), test_y, num_classes);
}

}  // namespace dissl::trainkit
