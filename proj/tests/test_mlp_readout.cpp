#include <doctest.h>

#include <cmath>
#include <vector>

#include "dissl/mlp.hpp"
#include "dissl/readout.hpp"
#include "dissl/rng.hpp"
#include "gradcheck.hpp"

namespace tk = dissl::trainkit;
using dissl::RngStream;
using tk::Mlp;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

TEST_CASE("mlp: backward matches finite differences") {
  RngStream rng(21);
  for (bool squash : {false, true}) {
    auto net = Mlp::make(3, {5, 4, 2}, tk::Activation::kTanh, squash, rng);
    Mat x = rng.normal_matrix(6, 3);
    // scalar loss: sum of squared outputs
    const auto loss = [&] { return net.forward(x).squaredNorm(); };
    Mlp::Cache cache;
    const Mat y = net.forward(x, cache);
    auto grads = net.zero_grads();
    const Mat gx = net.backward(cache, 2.0 * y, grads);
    CHECK(gradcheck::max_rel_error(loss, x, gx) < 1e-4);
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      CHECK(gradcheck::max_rel_error(loss, net.layers()[l].w, grads[l].w) <
            1e-4);
      Mat b = net.layers()[l].b;
      const auto loss_b = [&] {
        net.layers()[l].b = b;
        return net.forward(x).squaredNorm();
      };
      Mat gb = grads[l].b;
      CHECK(gradcheck::max_rel_error(loss_b, b, gb) < 1e-4);
      net.layers()[l].b = b;
    }
  }
}

TEST_CASE("mlp: leaky-relu kink avoided by tanh check above; relu forward") {
  RngStream rng(22);
  auto net = Mlp::make(2, {3}, tk::Activation::kRelu, false, rng);
  const Mat x = rng.normal_matrix(4, 2);
  const Mat y = net.forward(x);
  CHECK(y.rows() == 4);
  CHECK(y.cols() == 3);
}

TEST_CASE("mlp: squashed outputs lie in (0,1)") {
  RngStream rng(23);
  auto net = Mlp::make(3, {8, 4}, tk::Activation::kLeakyRelu, true, rng);
  const Mat y = net.forward(10.0 * rng.normal_matrix(50, 3));
  CHECK(y.minCoeff() > 0.0);
  CHECK(y.maxCoeff() < 1.0);
}

TEST_CASE("mlp: JSON round trip preserves the function") {
  RngStream rng(24);
  auto net = Mlp::make(4, {6, 3}, tk::Activation::kLeakyRelu, true, rng);
  const auto restored = Mlp::from_json(net.to_json());
  const Mat x = rng.normal_matrix(10, 4);
  CHECK(restored.forward(x) == net.forward(x));
  CHECK(restored.squash_output());
  CHECK(restored.input_dim() == 4);
}

TEST_CASE("adam: descends a simple regression loss") {
  RngStream rng(25);
  auto net = Mlp::make(2, {8, 1}, tk::Activation::kTanh, false, rng);
  const Mat x = rng.normal_matrix(64, 2);
  const Mat target = x.col(0) - 0.5 * x.col(1);
  tk::AdamOptimizer opt(1e-2);
  double first = 0.0, last = 0.0;
  for (int it = 0; it < 200; ++it) {
    Mlp::Cache cache;
    const Mat y = net.forward(x, cache);
    const Mat diff = y - target;
    const double loss = diff.squaredNorm() / x.rows();
    if (it == 0) first = loss;
    last = loss;
    auto grads = net.zero_grads();
    net.backward(cache, 2.0 * diff / x.rows(), grads);
    opt.step(net, grads);
  }
  CHECK(last < 0.1 * first);
}

TEST_CASE("r2: worked example and zero-variance NaN") {
  Mat pred(3, 2), target(3, 2);
  pred << 1, 5, 2, 5, 3, 5;
  target << 1, 1, 2, 2, 3, 3;
  const Vec per_dim = tk::r2_per_dim(pred, target);
  CHECK(per_dim[0] == doctest::Approx(1.0));
  // constant prediction of 5 against targets 1,2,3: SS_res = 16+9+4 = 29,
  // SS_tot = 2, r2 = 1 - 29/2
  CHECK(per_dim[1] == doctest::Approx(1.0 - 29.0 / 2.0));
  // constant target: NaN per dim, ignored in the mean
  target.col(1).setConstant(2.0);
  const Vec with_nan = tk::r2_per_dim(pred, target);
  CHECK(std::isnan(with_nan[1]));
  CHECK(tk::r2(pred, target) == doctest::Approx(1.0));
}

TEST_CASE("ridge: exact on copied targets, near zero on independent ones") {
  RngStream rng(26);
  const Mat x = rng.normal_matrix(500, 4);
  const Mat y = x.leftCols(2);
  const auto fit = tk::fit_ridge(x, y, 1e-8);
  CHECK(tk::r2(fit.predict(x), y) > 0.999);
  const Mat indep = rng.normal_matrix(500, 1);
  const auto fit2 = tk::fit_ridge(x, indep);
  const Mat test_x = rng.normal_matrix(500, 4);
  const Mat test_y = rng.normal_matrix(500, 1);
  CHECK(std::abs(tk::r2(fit2.predict(test_x), test_y)) < 0.05);
}

TEST_CASE("kernel ridge: fits a cubic the linear model cannot") {
  RngStream rng(27);
  const Mat x = rng.normal_matrix(800, 2);
  Mat y = (x.col(0).array().cube() + 0.5 * x.col(1).array().square()).matrix();
  const Mat xt = rng.normal_matrix(400, 2);
  Mat yt = (xt.col(0).array().cube() + 0.5 * xt.col(1).array().square()).matrix();
  CHECK(tk::readout_r2(x, y, xt, yt, /*nonlinear=*/true) > 0.99);
  CHECK(tk::readout_r2(x, y, xt, yt, /*nonlinear=*/false) < 0.9);
}

TEST_CASE("kernel ridge: anchor cap keeps the fit tractable") {
  RngStream rng(28);
  const Mat x = rng.normal_matrix(600, 2);
  const Mat y = x.col(0);
  const auto fit = tk::fit_kernel_ridge(x, y, 1e-6, /*max_anchors=*/100);
  CHECK(fit.anchors.rows() == 100);
  CHECK(tk::r2(fit.predict(x), y) > 0.95);
}

TEST_CASE("logistic: separable classes reach perfect pseudo-r2") {
  RngStream rng(29);
  const int n = 300;
  Mat x(n, 2);
  tk::IntVec labels(n);
  for (int i = 0; i < n; ++i) {
    const int k = i % 3;
    labels[i] = k;
    x(i, 0) = 4.0 * k + 0.3 * rng.normal();
    x(i, 1) = rng.normal();
  }
  const auto fit = tk::fit_logistic(x, labels, 3);
  CHECK(tk::pseudo_r2(fit.predict(x), labels, 3) > 0.99);
  CHECK(tk::readout_pseudo_r2(x, labels, x, labels, 3) > 0.99);
}

TEST_CASE("pseudo_r2: chance accuracy scores zero") {
  const int n = 400;
  tk::IntVec pred(n), target(n);
  for (int i = 0; i < n; ++i) {
    target[i] = i % 4;
    pred[i] = (i / 4) % 4;  // 25% accuracy by construction
  }
  CHECK(tk::pseudo_r2(pred, target, 4) == doctest::Approx(0.0).epsilon(1e-12));
  for (int i = 0; i < n; ++i) pred[i] = target[i];
  CHECK(tk::pseudo_r2(pred, target, 4) == doctest::Approx(1.0));
}
