#include "dissl/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace dissl::trainkit {

using nlohmann::json;

Activation activation_from_string(const std::string& s) {
  if (s == "leaky_relu") return Activation::kLeakyRelu;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  throw std::logic_error("bad activation");
}

namespace {

constexpr double kLeakySlope = 0.01;

double act(Activation a, double x) {
  switch (a) {
    case Activation::kLeakyRelu: return x >= 0.0 ? x : kLeakySlope * x;
    case Activation::kRelu: return x >= 0.0 ? x : 0.0;
    case Activation::kTanh: return std::tanh(x);
  }
  return x;
}

double act_deriv(Activation a, double pre) {
  switch (a) {
    case Activation::kLeakyRelu: return pre >= 0.0 ? 1.0 : kLeakySlope;
    case Activation::kRelu: return pre >= 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

// clamped away from the endpoints so squashed embeddings stay strictly
// inside (0,1) even when the pre-activation saturates in double precision
double logistic(double x) {
  const double y = 1.0 / (1.0 + std::exp(-x));
  return std::min(1.0 - 1e-12, std::max(1e-12, y));
}

}  // namespace

Mlp Mlp::make(int input_dim, const std::vector<int>& widths,
              Activation activation, bool squash_output, RngStream& rng) {
  if (input_dim < 1) throw std::invalid_argument("mlp: input_dim >= 1");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("mlp: widths >= 1");
  Mlp net;
  net.input_dim_ = input_dim;
  net.activation_ = activation;
  net.squash_output_ = squash_output;
  int fan_in = input_dim;
  for (int width : widths) {
    Layer layer;
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    layer.w = scale * rng.normal_matrix(width, fan_in);
    layer.b = Vec::Zero(width);
    net.layers_.push_back(std::move(layer));
    fan_in = width;
  }
  return net;
}

Mat Mlp::forward(const Mat& x) const {
  Cache cache;
  return forward(x, cache);
}

Mat Mlp::forward(const Mat& x, Cache& cache) const {
  if (x.cols() != input_dim_)
    throw std::invalid_argument("mlp forward: dimension mismatch");
  cache.input = x;
  cache.pre.clear();
  cache.post.clear();
  Mat h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Mat pre = (h * layers_[k].w.transpose()).rowwise() +
              layers_[k].b.transpose();
    const bool last = k + 1 == layers_.size();
    Mat post;
    if (!last) {
      const Activation a = activation_;
      post = pre.unaryExpr([a](double v) { return act(a, v); });
    } else if (squash_output_) {
      post = pre.unaryExpr([](double v) { return logistic(v); });
    } else {
      post = pre;
    }
    cache.pre.push_back(std::move(pre));
    cache.post.push_back(post);
    h = std::move(post);
  }
  return h;
}

std::vector<Mlp::Layer> Mlp::zero_grads() const {
  std::vector<Layer> grads;
  grads.reserve(layers_.size());
  for (const auto& layer : layers_)
    grads.push_back({Mat::Zero(layer.w.rows(), layer.w.cols()),
                     Vec::Zero(layer.b.size())});
  return grads;
}

Mat Mlp::backward(const Cache& cache, const Mat& grad_output,
                  std::vector<Layer>& grads) const {
  if (layers_.empty()) return grad_output;
  if (grads.size() != layers_.size())
    throw std::invalid_argument("mlp backward: bad grads shape");
  Mat g = grad_output;
  for (int k = static_cast<int>(layers_.size()) - 1; k >= 0; --k) {
    const bool last = k + 1 == static_cast<int>(layers_.size());
    Mat gz;
    if (!last) {
      const Activation a = activation_;
      gz = g.array() *
           cache.pre[k].unaryExpr([a](double v) { return act_deriv(a, v); })
               .array();
    } else if (squash_output_) {
      // y (1 - y) with y = logistic(pre)
      gz = g.array() * (cache.post[k].array() * (1.0 - cache.post[k].array()));
    } else {
      gz = g;
    }
    const Mat& input = k == 0 ? cache.input : cache.post[k - 1];
    grads[k].w += gz.transpose() * input;
    grads[k].b += gz.colwise().sum().transpose();
    g = gz * layers_[k].w;
  }
  return g;
}

std::string Mlp::to_json() const {
  json j;
  j["schema"] = "dissl.mlp/1";
  j["input_dim"] = input_dim_;
  j["activation"] = trainkit::to_string(activation_);
  j["squash_output"] = squash_output_;
  json layers = json::array();
  for (const auto& layer : layers_) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c)
        row.push_back(layer.w(i, c));
      rows.push_back(std::move(row));
    }
    json bias = json::array();
    for (Eigen::Index i = 0; i < layer.b.size(); ++i)
      bias.push_back(layer.b[i]);
    layers.push_back({{"w", std::move(rows)}, {"b", std::move(bias)}});
  }
  j["layers"] = std::move(layers);
  return j.dump();
}

Mlp Mlp::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("schema").get<std::string>() != "dissl.mlp/1")
    throw std::invalid_argument("mlp: unexpected schema tag");
  Mlp net;
  net.input_dim_ = j.at("input_dim").get<int>();
  net.activation_ = activation_from_string(j.at("activation").get<std::string>());
  net.squash_output_ = j.at("squash_output").get<bool>();
  for (const auto& lj : j.at("layers")) {
    const auto& wj = lj.at("w");
    Layer layer;
    layer.w.resize(wj.size(), wj.at(0).size());
    for (std::size_t i = 0; i < wj.size(); ++i)
      for (std::size_t c = 0; c < wj.at(i).size(); ++c)
        layer.w(i, c) = wj.at(i).at(c).get<double>();
    const auto& bj = lj.at("b");
    layer.b.resize(bj.size());
    for (std::size_t i = 0; i < bj.size(); ++i)
      layer.b[i] = bj.at(i).get<double>();
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

void AdamOptimizer::step(Mlp& model, const std::vector<Mlp::Layer>& grads) {
  auto& layers = model.layers();
  if (m_.empty()) {
    m_ = model.zero_grads();
    v_ = model.zero_grads();
  }
  if (grads.size() != layers.size())
    throw std::invalid_argument("adam: gradient shape mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < layers.size(); ++k) {
    m_[k].w = beta1_ * m_[k].w + (1.0 - beta1_) * grads[k].w;
    v_[k].w = beta2_ * v_[k].w.array().matrix() +
              (1.0 - beta2_) * grads[k].w.array().square().matrix();
    m_[k].b = beta1_ * m_[k].b + (1.0 - beta1_) * grads[k].b;
    v_[k].b = beta2_ * v_[k].b.array().matrix() +
              (1.0 - beta2_) * grads[k].b.array().square().matrix();
    layers[k].w.array() -=
        lr_ * (m_[k].w.array() / bc1) /
        ((v_[k].w.array() / bc2).sqrt() + eps_);
    layers[k].b.array() -=
        lr_ * (m_[k].b.array() / bc1) /
        ((v_[k].b.array() / bc2).sqrt() + eps_);
  }
}

}  // namespace dissl::trainkit
