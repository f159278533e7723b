#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dissl/rng.hpp"

namespace dissl::latentlab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Latent dimensions: d0 content dims plus M style blocks.
struct LatentSpec {
  int d0 = 1;
  std::vector<int> style_dims;  // d_1 .. d_M

  int num_styles() const { return static_cast<int>(style_dims.size()); }
  int style_total() const;
  int total() const { return d0 + style_total(); }
  /// Offset of style block m (1-based) within the style vector.
  int style_offset(int m) const;

  void validate() const;  // throws std::invalid_argument
};

enum class StyleMode { kShift, kPerfect };

StyleMode style_mode_from_string(const std::string& s);
std::string to_string(StyleMode mode);

/// Parameters of the Gaussian latent variable model:
///   c ~ N(0, Sigma_c),  s | c ~ N(a + B c, Sigma_s)
/// with style perturbations either shift (s~_m ~ N(s_m, Sigma_st block)) or
/// perfect (s~_m ~ N(0, I), independent of s_m).
struct GaussianLVMParams {
  LatentSpec spec;
  Mat sigma_c;       // d0 x d0
  Vec a;             // style_total
  Mat b;             // style_total x d0
  Mat sigma_s;       // style_total x style_total
  Mat sigma_stilde;  // style_total x style_total, block-diagonal per style
  StyleMode style_mode = StyleMode::kShift;

  /// Identity covariances, a = 0, B = 0.
  static GaussianLVMParams standard(const LatentSpec& spec,
                                    StyleMode mode = StyleMode::kShift);

  void validate() const;  // throws std::invalid_argument on non-PD etc.
};

struct LatentSample {
  Vec c;
  Vec s;

  Vec concat() const;
};

/// Mode-m perturbed pair: content is copied exactly; style block `mode` is
/// shared bit-exactly between the two perturbed latents (no block for mode 0).
struct AugmentedTriple {
  int mode = 0;
  LatentSample base;
  LatentSample z_tilde;
  LatentSample z_tilde_prime;
};

/// Invertible map from latent space to observation space: square affine
/// layers interleaved with a leaky-relu nonlinearity (slope 0.2), inverted
/// analytically layer by layer.
class MixingFunction {
 public:
  static constexpr double kSlope = 0.2;

  MixingFunction() = default;  // identity on any dimension

  int depth() const { return static_cast<int>(weights_.size()); }
  int dim() const { return dim_; }

  Vec apply(const Vec& z) const;
  Vec invert(const Vec& x) const;
  /// Row-wise batched versions; order preserved.
  Mat apply(const Mat& z) const;
  Mat invert(const Mat& x) const;

  /// Rebuild from affine layers; inverses are computed here.
  static MixingFunction from_layers(int dim, std::vector<Mat> weights,
                                    std::vector<Vec> biases);

  const std::vector<Mat>& weights() const { return weights_; }
  const std::vector<Vec>& biases() const { return biases_; }

 private:
  int dim_ = 0;  // 0 = identity on any input size
  std::vector<Mat> weights_;
  std::vector<Mat> inverses_;
  std::vector<Vec> biases_;
};

// ---- operations -------------------------------------------------------------

LatentSample sample_latent(const GaussianLVMParams& params, RngStream& rng);

AugmentedTriple perturb(const LatentSample& sample, int mode,
                        const GaussianLVMParams& params, RngStream& rng);

/// Random mixing with condition-number-bounded affine layers; depth 0 yields
/// the identity. Deterministic given the stream state.
MixingFunction build_mixing(int dim, int depth, RngStream& rng);

/// Closed-form CDF encoders phi*_m = F_block . (f^-1)_block, one per space
/// m = 0..M (0 = content). Requires A2: perfect interventions, or B = 0 with
/// block-diagonal style covariances.
class DarmoisOracle {
 public:
  DarmoisOracle(const GaussianLVMParams& params, const MixingFunction& mixing);

  int num_spaces() const { return static_cast<int>(blocks_.size()); }
  /// Encoding of observation x in space m; entries lie in (0,1).
  Vec encode(int space, const Vec& x) const;
  /// Row-wise batch version.
  Mat encode(int space, const Mat& x) const;
  /// Concatenated encodings across all spaces.
  Mat encode_all(const Mat& x) const;

 private:
  struct BlockCdf {
    int offset;  // within the full latent vector
    int dim;
    Vec mu;
    Mat whiten;  // inverse Cholesky factor of the block covariance
  };
  std::vector<BlockCdf> blocks_;
  MixingFunction mixing_;
};

DarmoisOracle darmois_oracle(const GaussianLVMParams& params,
                             const MixingFunction& mixing);

// ---- serialization (versioned JSON, see docs/formats) -----------------------

std::string to_json(const GaussianLVMParams& params);
GaussianLVMParams params_from_json(const std::string& text);
std::string to_json(const MixingFunction& mixing);
MixingFunction mixing_from_json(const std::string& text);

}  // namespace dissl::latentlab
