#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dissl/rng.hpp"

namespace dissl::trainkit {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Activation { kLeakyRelu, kRelu, kTanh };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

/// Plain fully connected net. Hidden layers use `activation`; the output
/// layer is linear, optionally followed by a logistic squash into (0,1).
class Mlp {
 public:
  struct Layer {
    Mat w;  // out x in
    Vec b;
  };

  struct Cache {
    Mat input;
    std::vector<Mat> pre;   // pre-activation per layer
    std::vector<Mat> post;  // post-activation per layer
  };

  Mlp() = default;
  static Mlp make(int input_dim, const std::vector<int>& widths,
                  Activation activation, bool squash_output, RngStream& rng);

  int input_dim() const { return input_dim_; }
  int output_dim() const {
    return layers_.empty() ? input_dim_ : static_cast<int>(layers_.back().w.rows());
  }
  bool squash_output() const { return squash_output_; }

  /// Rows of x are samples.
  Mat forward(const Mat& x) const;
  Mat forward(const Mat& x, Cache& cache) const;

  /// Backprop: returns dL/d input and accumulates parameter gradients into
  /// `grads` (same shape as this net; see zero_grads()).
  Mat backward(const Cache& cache, const Mat& grad_output,
               std::vector<Layer>& grads) const;

  std::vector<Layer> zero_grads() const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::string to_json() const;
  static Mlp from_json(const std::string& text);

 private:
  int input_dim_ = 0;
  Activation activation_ = Activation::kLeakyRelu;
  bool squash_output_ = false;
  std::vector<Layer> layers_;
};

/// Adam with bias correction; one instance per Mlp.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr = 1e-3, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Mlp& model, const std::vector<Mlp::Layer>& grads);

  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mlp::Layer> m_, v_;
};

}  // namespace dissl::trainkit
