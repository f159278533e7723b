#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dissl::objectives {

using Mat = Eigen::MatrixXd;

/// Stabilization floor for cosine denominators.
inline constexpr double kNormFloor = 1e-8;
/// Default epsilon inside the variance-hinge square root.
inline constexpr double kVicregEps = 1e-4;
/// Default weights of the variance / covariance parts of the VICReg
/// entropy term (the original VICReg mu and nu).
inline constexpr double kVicregLambdaV = 25.0;
inline constexpr double kVicregLambdaC = 1.0;

/// kSimclrEuclid is the InfoNCE variant with negative squared Euclidean
/// distance as the similarity and unnormalized embeddings; unlike the
/// scale-invariant cosine form its entropy rewards spreading along extra
/// coordinate directions, which is what lets excess embedding capacity pick
/// up style under a fixed invariance weight.
enum class Family { kSimclr, kBarlow, kVicreg, kSimclrEuclid };

Family family_from_string(const std::string& name);
std::string to_string(Family family);

/// Paired batch: row i of z and z_prime are embeddings of two views of the
/// same source.
struct EmbeddingBatch {
  Mat z;
  Mat z_prime;
};

// ---- invariance terms -------------------------------------------------------

/// Mean negative cosine between paired rows; in [-1, 1].
double simclr_invariance(const EmbeddingBatch& b);
double simclr_invariance_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp);

/// Sum over columns of (1 - column cosine)^2.
double barlow_invariance(const EmbeddingBatch& b);
double barlow_invariance_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp);

/// Mean squared distance between paired rows. Positive sign: minimization
/// aligns the views (the printed sign in some sources is a typo).
double vicreg_invariance(const EmbeddingBatch& b);
double vicreg_invariance_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp);

/// Mean squared distance between paired rows (shared with kSimclrEuclid,
/// whose InfoNCE alignment part is the same expression).
inline double simclr_euclid_invariance(const EmbeddingBatch& b) {
  return vicreg_invariance(b);
}
inline double simclr_euclid_invariance_grad(const EmbeddingBatch& b, Mat& gz,
                                            Mat& gzp) {
  return vicreg_invariance_grad(b, gz, gzp);
}

// ---- entropy terms ----------------------------------------------------------

/// (1/n) sum_i log sum_{j != i} exp(cos(z_i, z'_j)). Requires n >= 2.
double simclr_entropy(const EmbeddingBatch& b);
double simclr_entropy_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp);

/// (1/n) sum_i log sum_j exp(-||z_i - z'_j||^2), positive pair included in
/// the denominator as in the classic InfoNCE form. Requires n >= 2.
double simclr_euclid_entropy(const EmbeddingBatch& b);
double simclr_euclid_entropy_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp);

/// Sum of squared cross-column cosines (j != k).
double barlow_entropy(const EmbeddingBatch& b);
double barlow_entropy_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp);

/// Variance hinge plus squared off-diagonal covariance, both views, using the
/// unbiased sample covariance. Requires n >= 2.
double vicreg_entropy(const EmbeddingBatch& b, double lambda_v = kVicregLambdaV,
                      double lambda_c = kVicregLambdaC,
                      double eps = kVicregEps);
double vicreg_entropy_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp,
                           double lambda_v = kVicregLambdaV,
                           double lambda_c = kVicregLambdaC,
                           double eps = kVicregEps);

// family dispatch
double invariance(Family f, const EmbeddingBatch& b);
double invariance_grad(Family f, const EmbeddingBatch& b, Mat& gz, Mat& gzp);
double entropy(Family f, const EmbeddingBatch& b);
double entropy_grad(Family f, const EmbeddingBatch& b, Mat& gz, Mat& gzp);

// ---- structured objective ---------------------------------------------------

/// Embeddings of one mode's view pairs in every space: z[l] and z_prime[l]
/// are n_m x d_l.
struct BundleBatch {
  std::vector<Mat> z;
  std::vector<Mat> z_prime;

  Eigen::Index rows() const { return z.empty() ? 0 : z.front().rows(); }
};

/// One BundleBatch per mode m = 0..M.
struct StructuredBatch {
  std::vector<BundleBatch> modes;

  int num_spaces() const;
  void validate() const;  // throws std::invalid_argument
};

/// Gradient with the same block structure as a StructuredBatch.
struct StructuredGrad {
  std::vector<BundleBatch> modes;
};

struct LossTerms {
  std::vector<double> invariance;  // per space, unweighted
  std::vector<double> lambdas;
  double joint_entropy = 0.0;
  double content_entropy = 0.0;
  double total = 0.0;

  /// Flat term-name -> value record for experiment logs.
  std::map<std::string, double> flat() const;
};

/// Total loss: sum_m lambda_m * L^inv_m  +  L^ent on concatenated bundles
/// over all modes and views  +  L^ent on space-0 embeddings over all modes
/// and views. Invariance for space m is computed on mode-m pairs in space m
/// only.
LossTerms structured_loss(const StructuredBatch& batch,
                          const std::vector<double>& lambdas, Family family);
LossTerms structured_loss_grad(const StructuredBatch& batch,
                               const std::vector<double>& lambdas,
                               Family family, StructuredGrad& grad);

struct TheoremTerms {
  std::vector<double> alignment;  // mean L2 distance per mode, in-space
  double alignment_total = 0.0;
  double entropy_surrogate = 0.0;
  double total = 0.0;
};

/// Sum over modes of the mean L2 alignment in the mode's own space, plus a
/// joint-entropy surrogate evaluated on the concatenated mode-0 bundles: a
/// per-dimension variance hinge, a covariance penalty over a half-period
/// cosine feature lift (uniform marginals + HSIC-style independence), and a
/// Gaussian-kernel pairwise repulsion (resubstitution entropy estimate that
/// penalizes concentration on low-dimensional manifolds). Embeddings must
/// lie in (0,1).
TheoremTerms theorem_objective(const StructuredBatch& batch);
TheoremTerms theorem_objective_grad(const StructuredBatch& batch,
                                    StructuredGrad& grad);

}  // namespace dissl::objectives
