#include "dissl/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace dissl::objectives {

namespace {

using Eigen::Index;
using Vec = Eigen::VectorXd;

void check_pair_shapes(const EmbeddingBatch& b) {
  if (b.z.rows() != b.z_prime.rows() || b.z.cols() != b.z_prime.cols())
    throw std::invalid_argument("embedding batch: mismatched shapes");
  if (b.z.rows() < 1) throw std::invalid_argument("embedding batch: empty");
}

double floored(double norm) { return std::max(norm, kNormFloor); }

// cos(a, b) with floored denominators
double row_cosine(const Vec& a, const Vec& b) {
  return a.dot(b) / (floored(a.norm()) * floored(b.norm()));
}

// d cos(a,b) / da, with the floor treated as a constant
Vec row_cosine_grad_a(const Vec& a, const Vec& b) {
  const double na = floored(a.norm());
  const double nb = floored(b.norm());
  const double c = a.dot(b) / (na * nb);
  return b / (na * nb) - (c / (na * na)) * a;
}

}  // namespace

Family family_from_string(const std::string& name) {
  if (name == "simclr") return Family::kSimclr;
  if (name == "barlow") return Family::kBarlow;
  if (name == "vicreg") return Family::kVicreg;
  if (name == "simclr-euclid") return Family::kSimclrEuclid;
  throw std::invalid_argument("unknown loss family: " + name);
}

std::string to_string(Family family) {
  switch (family) {
    case Family::kSimclr: return "simclr";
    case Family::kBarlow: return "barlow";
    case Family::kVicreg: return "vicreg";
    case Family::kSimclrEuclid: return "simclr-euclid";
  }
  throw std::logic_error("bad family enum");
}

// ---- SimCLR -----------------------------------------------------------------

double simclr_invariance(const EmbeddingBatch& b) {
  check_pair_shapes(b);
  const Index n = b.z.rows();
  double acc = 0.0;
  for (Index i = 0; i < n; ++i)
    acc += row_cosine(b.z.row(i), b.z_prime.row(i));
  return -acc / static_cast<double>(n);
}

double simclr_invariance_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp) {
  check_pair_shapes(b);
  const Index n = b.z.rows();
  gz.setZero(n, b.z.cols());
  gzp.setZero(n, b.z.cols());
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Vec zi = b.z.row(i), zpi = b.z_prime.row(i);
    acc += row_cosine(zi, zpi);
    gz.row(i) = -row_cosine_grad_a(zi, zpi).transpose() / static_cast<double>(n);
    gzp.row(i) =
        -row_cosine_grad_a(zpi, zi).transpose() / static_cast<double>(n);
  }
  return -acc / static_cast<double>(n);
}

double simclr_entropy(const EmbeddingBatch& b) {
  check_pair_shapes(b);
  const Index n = b.z.rows();
  if (n < 2) throw std::invalid_argument("simclr_entropy needs n >= 2");
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      s += std::exp(row_cosine(b.z.row(i), b.z_prime.row(j)));
    }
    acc += std::log(s);
  }
  return acc / static_cast<double>(n);
}

double simclr_entropy_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp) {
  check_pair_shapes(b);
  const Index n = b.z.rows();
  if (n < 2) throw std::invalid_argument("simclr_entropy needs n >= 2");
  gz.setZero(n, b.z.cols());
  gzp.setZero(n, b.z.cols());
  double acc = 0.0;
  Mat w(n, n);  // softmax weights over j != i
  for (Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) { w(i, j) = 0.0; continue; }
      w(i, j) = std::exp(row_cosine(b.z.row(i), b.z_prime.row(j)));
      s += w(i, j);
    }
    acc += std::log(s);
    w.row(i) /= s;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec zi = b.z.row(i), zpj = b.z_prime.row(j);
      const double wij = inv_n * w(i, j);
      gz.row(i) += wij * row_cosine_grad_a(zi, zpj).transpose();
      gzp.row(j) += wij * row_cosine_grad_a(zpj, zi).transpose();
    }
  }
  return acc * inv_n;
}

// ---- Barlow Twins -----------------------------------------------------------

double barlow_invariance(const EmbeddingBatch& b) {
  check_pair_shapes(b);
  double acc = 0.0;
  for (Index j = 0; j < b.z.cols(); ++j) {
    const double c = row_cosine(b.z.col(j), b.z_prime.col(j));
    acc += (1.0 - c) * (1.0 - c);
  }
  return acc;
}

double barlow_invariance_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp) {
  check_pair_shapes(b);
  gz.setZero(b.z.rows(), b.z.cols());
  gzp.setZero(b.z.rows(), b.z.cols());
  double acc = 0.0;
  for (Index j = 0; j < b.z.cols(); ++j) {
    const Vec a = b.z.col(j), c = b.z_prime.col(j);
    const double cc = row_cosine(a, c);
    acc += (1.0 - cc) * (1.0 - cc);
    const double dcc = -2.0 * (1.0 - cc);
    gz.col(j) = dcc * row_cosine_grad_a(a, c);
    gzp.col(j) = dcc * row_cosine_grad_a(c, a);
  }
  return acc;
}

double barlow_entropy(const EmbeddingBatch& b) {
  check_pair_shapes(b);
  double acc = 0.0;
  for (Index j = 0; j < b.z.cols(); ++j)
    for (Index k = 0; k < b.z.cols(); ++k) {
      if (k == j) continue;
      const double c = row_cosine(b.z.col(j), b.z_prime.col(k));
      acc += c * c;
    }
  return acc;
}

double barlow_entropy_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp) {
  check_pair_shapes(b);
  gz.setZero(b.z.rows(), b.z.cols());
  gzp.setZero(b.z.rows(), b.z.cols());
  double acc = 0.0;
  for (Index j = 0; j < b.z.cols(); ++j)
    for (Index k = 0; k < b.z.cols(); ++k) {
      if (k == j) continue;
      const Vec a = b.z.col(j), c = b.z_prime.col(k);
      const double cc = row_cosine(a, c);
      acc += cc * cc;
      gz.col(j) += 2.0 * cc * row_cosine_grad_a(a, c);
      gzp.col(k) += 2.0 * cc * row_cosine_grad_a(c, a);
    }
  return acc;
}

// ---- VICReg -----------------------------------------------------------------

double vicreg_invariance(const EmbeddingBatch& b) {
  check_pair_shapes(b);
  return (b.z - b.z_prime).squaredNorm() / static_cast<double>(b.z.rows());
}

double vicreg_invariance_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp) {
  check_pair_shapes(b);
  const double inv_n = 1.0 / static_cast<double>(b.z.rows());
  gz = 2.0 * inv_n * (b.z - b.z_prime);
  gzp = -gz;
  return (b.z - b.z_prime).squaredNorm() * inv_n;
}

namespace {

// variance hinge + off-diagonal covariance for one matrix; optionally
// accumulates the gradient
double vicreg_entropy_one(const Mat& z, double lambda_v, double lambda_c,
                          double eps, Mat* grad) {
  const Index n = z.rows();
  const Index d = z.cols();
  const double nm1 = static_cast<double>(n - 1);
  const Mat zc = z.rowwise() - z.colwise().mean();
  const Mat cov = zc.transpose() * zc / nm1;

  double hinge = 0.0;
  Vec hinge_scale = Vec::Zero(d);
  for (Index j = 0; j < d; ++j) {
    const double s = std::sqrt(cov(j, j) + eps);
    if (1.0 - s > 0.0) {
      hinge += 1.0 - s;
      hinge_scale[j] = -1.0 / s;  // d hinge / d var_j * 2(n-1)... folded below
    }
  }

  Mat off = cov;
  off.diagonal().setZero();
  const double covsq = off.squaredNorm();

  if (grad) {
    // variance part: d var_j / d z_ij = 2 zc_ij / (n-1)
    Mat g = zc * hinge_scale.asDiagonal() / nm1;  // includes chain -1/(2 s)*2
    g *= lambda_v / static_cast<double>(d);
    // covariance part: 4 zc * offdiag(cov) / (n-1)
    g += (lambda_c / static_cast<double>(d)) * (4.0 / nm1) * (zc * off);
    *grad += g;
  }
  return lambda_v / static_cast<double>(d) * hinge +
         lambda_c / static_cast<double>(d) * covsq;
}

}  // namespace

double vicreg_entropy(const EmbeddingBatch& b, double lambda_v, double lambda_c,
                      double eps) {
  check_pair_shapes(b);
  if (b.z.rows() < 2) throw std::invalid_argument("vicreg_entropy needs n >= 2");
  if (eps <= 0.0) throw std::invalid_argument("vicreg_entropy needs eps > 0");
  return vicreg_entropy_one(b.z, lambda_v, lambda_c, eps, nullptr) +
         vicreg_entropy_one(b.z_prime, lambda_v, lambda_c, eps, nullptr);
}

double vicreg_entropy_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp,
                           double lambda_v, double lambda_c, double eps) {
  check_pair_shapes(b);
  if (b.z.rows() < 2) throw std::invalid_argument("vicreg_entropy needs n >= 2");
  if (eps <= 0.0) throw std::invalid_argument("vicreg_entropy needs eps > 0");
  gz.setZero(b.z.rows(), b.z.cols());
  gzp.setZero(b.z.rows(), b.z.cols());
  return vicreg_entropy_one(b.z, lambda_v, lambda_c, eps, &gz) +
         vicreg_entropy_one(b.z_prime, lambda_v, lambda_c, eps, &gzp);
}

// ---- SimCLR with Euclidean similarity ----------------------------------------

double simclr_euclid_entropy(const EmbeddingBatch& b) {
  check_pair_shapes(b);
  const Index n = b.z.rows();
  if (n < 2) throw std::invalid_argument("simclr_euclid_entropy needs n >= 2");
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Index j = 0; j < n; ++j)
      s += std::exp(-(b.z.row(i) - b.z_prime.row(j)).squaredNorm());
    acc += std::log(std::max(s, 1e-300));
  }
  return acc / static_cast<double>(n);
}

double simclr_euclid_entropy_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp) {
  check_pair_shapes(b);
  const Index n = b.z.rows();
  if (n < 2) throw std::invalid_argument("simclr_euclid_entropy needs n >= 2");
  gz.setZero(n, b.z.cols());
  gzp.setZero(n, b.z.cols());
  double acc = 0.0;
  Mat w(n, n);  // softmax weights over all j, positive pair included
  for (Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Index j = 0; j < n; ++j) {
      w(i, j) = std::exp(-(b.z.row(i) - b.z_prime.row(j)).squaredNorm());
      s += w(i, j);
    }
    s = std::max(s, 1e-300);
    acc += std::log(s);
    w.row(i) /= s;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const Vec diff = b.z.row(i) - b.z_prime.row(j);
      const double wij = inv_n * w(i, j);
      gz.row(i) += (-2.0 * wij) * diff.transpose();
      gzp.row(j) += (2.0 * wij) * diff.transpose();
    }
  }
  return acc * inv_n;
}

// ---- dispatch ---------------------------------------------------------------

double invariance(Family f, const EmbeddingBatch& b) {
  switch (f) {
    case Family::kSimclr: return simclr_invariance(b);
    case Family::kBarlow: return barlow_invariance(b);
    case Family::kVicreg: return vicreg_invariance(b);
    case Family::kSimclrEuclid: return simclr_euclid_invariance(b);
  }
  throw std::logic_error("bad family enum");
}

double invariance_grad(Family f, const EmbeddingBatch& b, Mat& gz, Mat& gzp) {
  switch (f) {
    case Family::kSimclr: return simclr_invariance_grad(b, gz, gzp);
    case Family::kBarlow: return barlow_invariance_grad(b, gz, gzp);
    case Family::kVicreg: return vicreg_invariance_grad(b, gz, gzp);
    case Family::kSimclrEuclid: return simclr_euclid_invariance_grad(b, gz, gzp);
  }
  throw std::logic_error("bad family enum");
}

double entropy(Family f, const EmbeddingBatch& b) {
  switch (f) {
    case Family::kSimclr: return simclr_entropy(b);
    case Family::kBarlow: return barlow_entropy(b);
    case Family::kVicreg: return vicreg_entropy(b);
    case Family::kSimclrEuclid: return simclr_euclid_entropy(b);
  }
  throw std::logic_error("bad family enum");
}

double entropy_grad(Family f, const EmbeddingBatch& b, Mat& gz, Mat& gzp) {
  switch (f) {
    case Family::kSimclr: return simclr_entropy_grad(b, gz, gzp);
    case Family::kBarlow: return barlow_entropy_grad(b, gz, gzp);
    case Family::kVicreg: return vicreg_entropy_grad(b, gz, gzp);
    case Family::kSimclrEuclid: return simclr_euclid_entropy_grad(b, gz, gzp);
  }
  throw std::logic_error("bad family enum");
}

// ---- structured objective ---------------------------------------------------

int StructuredBatch::num_spaces() const {
  return modes.empty() ? 0 : static_cast<int>(modes.front().z.size());
}

void StructuredBatch::validate() const {
  if (modes.empty()) throw std::invalid_argument("structured batch: no modes");
  const int spaces = num_spaces();
  if (spaces != static_cast<int>(modes.size()))
    throw std::invalid_argument(
        "structured batch: need one embedding space per mode");
  for (const auto& mode : modes) {
    if (static_cast<int>(mode.z.size()) != spaces ||
        static_cast<int>(mode.z_prime.size()) != spaces)
      throw std::invalid_argument("structured batch: missing space");
    const Index n = mode.rows();
    if (n < 1) throw std::invalid_argument("structured batch: empty mode");
    for (int l = 0; l < spaces; ++l) {
      if (mode.z[l].rows() != n || mode.z_prime[l].rows() != n ||
          mode.z[l].cols() != modes.front().z[l].cols() ||
          mode.z_prime[l].cols() != mode.z[l].cols())
        throw std::invalid_argument("structured batch: inconsistent shapes");
    }
  }
}

std::map<std::string, double> LossTerms::flat() const {
  std::map<std::string, double> out;
  for (std::size_t m = 0; m < invariance.size(); ++m) {
    out["inv_" + std::to_string(m)] = invariance[m];
    out["lambda_" + std::to_string(m)] = lambdas[m];
  }
  out["ent_joint"] = joint_entropy;
  out["ent_content"] = content_entropy;
  out["total"] = total;
  return out;
}

namespace {

Index total_rows(const StructuredBatch& batch) {
  Index n = 0;
  for (const auto& mode : batch.modes) n += mode.rows();
  return n;
}

// stack the concatenated per-space embeddings of every mode; spaces may be
// all of them (joint entropy) or just {0} (content entropy)
EmbeddingBatch stack_bundles(const StructuredBatch& batch, int spaces_used) {
  Index d = 0;
  for (int l = 0; l < spaces_used; ++l) d += batch.modes.front().z[l].cols();
  EmbeddingBatch out;
  out.z.resize(total_rows(batch), d);
  out.z_prime.resize(total_rows(batch), d);
  Index row = 0;
  for (const auto& mode : batch.modes) {
    Index col = 0;
    for (int l = 0; l < spaces_used; ++l) {
      const Index dl = mode.z[l].cols();
      out.z.block(row, col, mode.rows(), dl) = mode.z[l];
      out.z_prime.block(row, col, mode.rows(), dl) = mode.z_prime[l];
      col += dl;
    }
    row += mode.rows();
  }
  return out;
}

void scatter_bundles(const Mat& gz, const Mat& gzp, int spaces_used,
                     StructuredGrad& grad) {
  Index row = 0;
  for (auto& mode : grad.modes) {
    const Index n = mode.rows();
    Index col = 0;
    for (int l = 0; l < spaces_used; ++l) {
      const Index dl = mode.z[l].cols();
      mode.z[l] += gz.block(row, col, n, dl);
      mode.z_prime[l] += gzp.block(row, col, n, dl);
      col += dl;
    }
    row += n;
  }
}

StructuredGrad zero_grad_like(const StructuredBatch& batch) {
  StructuredGrad grad;
  grad.modes.resize(batch.modes.size());
  for (std::size_t m = 0; m < batch.modes.size(); ++m) {
    const auto& mode = batch.modes[m];
    auto& gm = grad.modes[m];
    gm.z.resize(mode.z.size());
    gm.z_prime.resize(mode.z.size());
    for (std::size_t l = 0; l < mode.z.size(); ++l) {
      gm.z[l] = Mat::Zero(mode.z[l].rows(), mode.z[l].cols());
      gm.z_prime[l] = Mat::Zero(mode.z[l].rows(), mode.z[l].cols());
    }
  }
  return grad;
}

LossTerms structured_loss_impl(const StructuredBatch& batch,
                               const std::vector<double>& lambdas,
                               Family family, StructuredGrad* grad) {
  batch.validate();
  const int spaces = batch.num_spaces();
  if (static_cast<int>(lambdas.size()) != spaces)
    throw std::invalid_argument("structured_loss: need M+1 lambda weights");
  for (double l : lambdas)
    if (!(l > 0.0))
      throw std::invalid_argument("structured_loss: lambdas must be > 0");

  LossTerms terms;
  terms.lambdas = lambdas;
  terms.invariance.resize(spaces);

  for (int m = 0; m < spaces; ++m) {
    EmbeddingBatch pair{batch.modes[m].z[m], batch.modes[m].z_prime[m]};
    if (grad) {
      Mat gz, gzp;
      terms.invariance[m] = invariance_grad(family, pair, gz, gzp);
      grad->modes[m].z[m] += lambdas[m] * gz;
      grad->modes[m].z_prime[m] += lambdas[m] * gzp;
    } else {
      terms.invariance[m] = invariance(family, pair);
    }
  }

  EmbeddingBatch joint = stack_bundles(batch, spaces);
  EmbeddingBatch content = stack_bundles(batch, 1);
  if (grad) {
    Mat gz, gzp;
    terms.joint_entropy = entropy_grad(family, joint, gz, gzp);
    scatter_bundles(gz, gzp, spaces, *grad);
    terms.content_entropy = entropy_grad(family, content, gz, gzp);
    scatter_bundles(gz, gzp, 1, *grad);
  } else {
    terms.joint_entropy = entropy(family, joint);
    terms.content_entropy = entropy(family, content);
  }

  terms.total = terms.joint_entropy + terms.content_entropy;
  for (int m = 0; m < spaces; ++m)
    terms.total += lambdas[m] * terms.invariance[m];
  return terms;
}

}  // namespace

LossTerms structured_loss(const StructuredBatch& batch,
                          const std::vector<double>& lambdas, Family family) {
  return structured_loss_impl(batch, lambdas, family, nullptr);
}

LossTerms structured_loss_grad(const StructuredBatch& batch,
                               const std::vector<double>& lambdas,
                               Family family, StructuredGrad& grad) {
  grad = zero_grad_like(batch);
  return structured_loss_impl(batch, lambdas, family, &grad);
}

// ---- theorem-verification objective ----------------------------------------

namespace {

// Joint-entropy surrogate on a box-constrained embedding matrix z (n x d,
// entries in (0,1)), three ingredients:
//  * a variance hinge on the raw coordinates keeps every dimension spread
//    out (scaled so the uniform marginal sits exactly at the hinge);
//  * a squared-covariance penalty over the cosine feature lift
//    {sqrt(2) cos(pi k z_j), k = 1..k_max} -- the half-period cosine basis
//    is orthogonal under the uniform marginal and injective on [0, 1], so
//    within-coordinate covariance vanishes iff the marginal is uniform (up
//    to harmonics above k_max) and cross-coordinate covariance vanishing is
//    an HSIC-style independence condition;
//  * a Gaussian-kernel pairwise repulsion
//    (1/n) sum_i log (1/(n-1)) sum_{j != i} exp(-|z_i - z_j|^2 / (2 h^2)),
//    a resubstitution estimate of the negative joint entropy. Minimizing it
//    penalizes concentration of the joint distribution on any
//    low-dimensional manifold -- including embeddings that are redundant
//    nonlinear, linearly decorrelated functions of one another, which the
//    moment penalties alone cannot detect. Kept at a modest weight because
//    on its own the repulsion piles mass against the box boundary; the
//    covariance term holds the marginals uniform.
double box_entropy_one(const Mat& z, int k_max, double bandwidth,
                       double lambda_v, double lambda_c, double lambda_u,
                       double eps, Mat* grad) {
  constexpr double kPi = 3.141592653589793;
  constexpr double kSqrt2 = 1.4142135623730951;
  const Index n = z.rows();
  const Index d = z.cols();
  const double nm1 = static_cast<double>(n - 1);

  // variance hinge
  double hinge = 0.0;
  Vec hinge_scale = Vec::Zero(d);
  const Mat zc = z.rowwise() - z.colwise().mean();
  for (Index j = 0; j < d; ++j) {
    const double var = 12.0 * zc.col(j).squaredNorm() / nm1;
    const double s = std::sqrt(var + eps);
    if (1.0 - s > 0.0) {
      hinge += 1.0 - s;
      hinge_scale[j] = -12.0 / s;  // chain through 12 * var(z_j)
    }
  }

  // cosine features, zero mean and unit variance under a uniform marginal
  const Index f = static_cast<Index>(k_max) * d;
  Mat v(n, f), dv(n, f);
  Index col = 0;
  for (Index j = 0; j < d; ++j)
    for (int k = 1; k <= k_max; ++k, ++col) {
      const double w = kPi * k;
      v.col(col) = kSqrt2 * (w * z.col(j).array()).cos();
      dv.col(col) = -kSqrt2 * w * (w * z.col(j).array()).sin();
    }
  const Mat vc = v.rowwise() - v.colwise().mean();
  Mat off = vc.transpose() * vc / nm1;
  off.diagonal().setZero();
  const double covsq = off.squaredNorm();

  // pairwise Gaussian-kernel repulsion
  const double inv_2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  Mat k(n, n);
  for (Index i = 0; i < n; ++i) {
    k(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      const double kij =
          std::exp(-(z.row(i) - z.row(j)).squaredNorm() * inv_2h2);
      k(i, j) = kij;
      k(j, i) = kij;
    }
  }
  const Vec row_sum = k.rowwise().sum();
  double repulsion = 0.0;
  for (Index i = 0; i < n; ++i) repulsion += std::log(row_sum[i] / nm1);
  repulsion /= static_cast<double>(n);

  const double wv = lambda_v / static_cast<double>(d);
  const double wc = lambda_c / static_cast<double>(f);
  if (grad) {
    Mat g = zc * hinge_scale.asDiagonal() / nm1 * wv;
    const Mat gv = wc * (4.0 / nm1) * (vc * off);  // d covsq / dv
    col = 0;
    for (Index j = 0; j < d; ++j)
      for (int kk = 0; kk < k_max; ++kk, ++col)
        g.col(j).array() += gv.col(col).array() * dv.col(col).array();
    // d repulsion / d z_p: softmax-weighted attraction toward z_p from both
    // the log term of row p and the rows where p appears as a neighbor
    const double scale = lambda_u * 2.0 * inv_2h2 / static_cast<double>(n);
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        const double w = scale * k(i, j) *
                         (1.0 / row_sum[i] + 1.0 / row_sum[j]);
        g.row(i) -= w * (z.row(i) - z.row(j));
        g.row(j) += w * (z.row(i) - z.row(j));
      }
    *grad += g;
  }
  return wv * hinge + wc * covsq + lambda_u * repulsion;
}

TheoremTerms theorem_impl(const StructuredBatch& batch, StructuredGrad* grad) {
  batch.validate();
  const int spaces = batch.num_spaces();
  for (const auto& mode : batch.modes)
    for (int l = 0; l < spaces; ++l)
      if ((mode.z[l].array() <= 0.0).any() || (mode.z[l].array() >= 1.0).any() ||
          (mode.z_prime[l].array() <= 0.0).any() ||
          (mode.z_prime[l].array() >= 1.0).any())
        throw std::domain_error(
            "theorem_objective: embeddings must lie in (0,1)");

  TheoremTerms terms;
  terms.alignment.resize(spaces);
  for (int m = 0; m < spaces; ++m) {
    const Mat& a = batch.modes[m].z[m];
    const Mat& b = batch.modes[m].z_prime[m];
    const Index n = a.rows();
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double dist = (a.row(i) - b.row(i)).norm();
      acc += dist;
      if (grad) {
        const double scale = 1.0 / (static_cast<double>(n) * floored(dist));
        grad->modes[m].z[m].row(i) += scale * (a.row(i) - b.row(i));
        grad->modes[m].z_prime[m].row(i) -= scale * (a.row(i) - b.row(i));
      }
    }
    terms.alignment[m] = acc / static_cast<double>(n);
    terms.alignment_total += terms.alignment[m];
  }

  // joint-entropy surrogate on the concatenated mode-0 bundles (see
  // box_entropy_one above)
  constexpr int kHarmonics = 3;
  constexpr double kBandwidth = 0.3;
  constexpr double kRepulsionWeight = 0.3;
  StructuredBatch mode0{{batch.modes.front()}};
  EmbeddingBatch joint = stack_bundles(mode0, spaces);
  if (grad) {
    Mat gz = Mat::Zero(joint.z.rows(), joint.z.cols());
    Mat gzp = Mat::Zero(joint.z.rows(), joint.z.cols());
    terms.entropy_surrogate =
        box_entropy_one(joint.z, kHarmonics, kBandwidth, kVicregLambdaV,
                        kVicregLambdaC, kRepulsionWeight, kVicregEps, &gz) +
        box_entropy_one(joint.z_prime, kHarmonics, kBandwidth,
                        kVicregLambdaV, kVicregLambdaC, kRepulsionWeight,
                        kVicregEps, &gzp);
    StructuredGrad g0;
    g0.modes = {zero_grad_like(mode0).modes.front()};
    scatter_bundles(gz, gzp, spaces, g0);
    for (int l = 0; l < spaces; ++l) {
      grad->modes.front().z[l] += g0.modes.front().z[l];
      grad->modes.front().z_prime[l] += g0.modes.front().z_prime[l];
    }
  } else {
    terms.entropy_surrogate =
        box_entropy_one(joint.z, kHarmonics, kBandwidth, kVicregLambdaV,
                        kVicregLambdaC, kRepulsionWeight, kVicregEps,
                        nullptr) +
        box_entropy_one(joint.z_prime, kHarmonics, kBandwidth,
                        kVicregLambdaV, kVicregLambdaC, kRepulsionWeight,
                        kVicregEps, nullptr);
  }

  terms.total = terms.alignment_total + terms.entropy_surrogate;
  return terms;
}

}  // namespace

TheoremTerms theorem_objective(const StructuredBatch& batch) {
  return theorem_impl(batch, nullptr);
}

TheoremTerms theorem_objective_grad(const StructuredBatch& batch,
                                    StructuredGrad& grad) {
  grad = zero_grad_like(batch);
  return theorem_impl(batch, &grad);
}

}  // namespace dissl::objectives
