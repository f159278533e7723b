#include "dissl/latentlab.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace dissl::latentlab {

using nlohmann::json;

// ---- LatentSpec -------------------------------------------------------------

int LatentSpec::style_total() const {
  return std::accumulate(style_dims.begin(), style_dims.end(), 0);
}

int LatentSpec::style_offset(int m) const {
  if (m < 1 || m > num_styles())
    throw std::invalid_argument("style block index out of range");
  int off = 0;
  for (int l = 0; l < m - 1; ++l) off += style_dims[l];
  return off;
}

void LatentSpec::validate() const {
  if (d0 < 1) throw std::invalid_argument("latent spec: d0 >= 1 required");
  for (int d : style_dims)
    if (d < 1) throw std::invalid_argument("latent spec: style dims >= 1");
}

// ---- params -----------------------------------------------------------------

StyleMode style_mode_from_string(const std::string& s) {
  if (s == "shift") return StyleMode::kShift;
  if (s == "perfect") return StyleMode::kPerfect;
  throw std::invalid_argument("unknown style mode: " + s);
}

std::string to_string(StyleMode mode) {
  return mode == StyleMode::kShift ? "shift" : "perfect";
}

GaussianLVMParams GaussianLVMParams::standard(const LatentSpec& spec,
                                              StyleMode mode) {
  spec.validate();
  GaussianLVMParams p;
  p.spec = spec;
  const int ds = spec.style_total();
  p.sigma_c = Mat::Identity(spec.d0, spec.d0);
  p.a = Vec::Zero(ds);
  p.b = Mat::Zero(ds, spec.d0);
  p.sigma_s = Mat::Identity(ds, ds);
  p.sigma_stilde = Mat::Identity(ds, ds);
  p.style_mode = mode;
  return p;
}

namespace {

Mat cholesky_or_throw(const Mat& sigma, const char* what) {
  if (sigma.rows() != sigma.cols() ||
      !sigma.isApprox(sigma.transpose(), 1e-10))
    throw std::invalid_argument(std::string(what) + ": not symmetric");
  Eigen::LLT<Mat> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(what) + ": not positive-definite");
  return llt.matrixL();
}

bool block_diagonal(const Mat& m, const LatentSpec& spec) {
  for (int i = 1; i <= spec.num_styles(); ++i)
    for (int j = 1; j <= spec.num_styles(); ++j) {
      if (i == j) continue;
      if (m.block(spec.style_offset(i), spec.style_offset(j),
                  spec.style_dims[i - 1], spec.style_dims[j - 1])
              .cwiseAbs()
              .maxCoeff() > 0.0)
        return false;
    }
  return true;
}

}  // namespace

void GaussianLVMParams::validate() const {
  spec.validate();
  const int ds = spec.style_total();
  if (sigma_c.rows() != spec.d0 || a.size() != ds || b.rows() != ds ||
      b.cols() != spec.d0 || sigma_s.rows() != ds || sigma_stilde.rows() != ds)
    throw std::invalid_argument("lvm params: shapes inconsistent with spec");
  cholesky_or_throw(sigma_c, "sigma_c");
  cholesky_or_throw(sigma_s, "sigma_s");
  cholesky_or_throw(sigma_stilde, "sigma_stilde");
  if (!block_diagonal(sigma_stilde, spec))
    throw std::invalid_argument(
        "sigma_stilde: must be block-diagonal per style block (the style "
        "conditional factorizes)");
}

Vec LatentSample::concat() const {
  Vec z(c.size() + s.size());
  z << c, s;
  return z;
}

// ---- sampling ---------------------------------------------------------------

LatentSample sample_latent(const GaussianLVMParams& params, RngStream& rng) {
  params.validate();
  const auto& spec = params.spec;
  const Mat lc = cholesky_or_throw(params.sigma_c, "sigma_c");
  const Mat ls = cholesky_or_throw(params.sigma_s, "sigma_s");
  LatentSample out;
  out.c = lc * rng.normal_vector(spec.d0);
  out.s = params.a + params.b * out.c + ls * rng.normal_vector(spec.style_total());
  return out;
}

AugmentedTriple perturb(const LatentSample& sample, int mode,
                        const GaussianLVMParams& params, RngStream& rng) {
  const auto& spec = params.spec;
  const int m_count = spec.num_styles();
  if (mode < 0 || mode > m_count)
    throw std::invalid_argument("perturb: mode out of range");
  if (sample.c.size() != spec.d0 || sample.s.size() != spec.style_total())
    throw std::invalid_argument("perturb: sample does not match spec");

  AugmentedTriple t;
  t.mode = mode;
  t.base = sample;
  t.z_tilde.c = sample.c;
  t.z_tilde_prime.c = sample.c;
  t.z_tilde.s.resize(spec.style_total());
  t.z_tilde_prime.s.resize(spec.style_total());

  for (int l = 1; l <= m_count; ++l) {
    const int off = spec.style_offset(l);
    const int dl = spec.style_dims[l - 1];
    auto draw = [&]() -> Vec {
      if (params.style_mode == StyleMode::kPerfect) return rng.normal_vector(dl);
      const Mat lblock =
          Eigen::LLT<Mat>(params.sigma_stilde.block(off, off, dl, dl)).matrixL();
      return sample.s.segment(off, dl) + lblock * rng.normal_vector(dl);
    };
    t.z_tilde.s.segment(off, dl) = draw();
    t.z_tilde_prime.s.segment(off, dl) =
        (l == mode) ? t.z_tilde.s.segment(off, dl) : draw();
  }
  return t;
}

// ---- mixing function --------------------------------------------------------

MixingFunction MixingFunction::from_layers(int dim, std::vector<Mat> weights,
                                           std::vector<Vec> biases) {
  MixingFunction f;
  f.dim_ = dim;
  f.weights_ = std::move(weights);
  f.biases_ = std::move(biases);
  if (f.weights_.size() != f.biases_.size())
    throw std::invalid_argument("mixing: layer count mismatch");
  f.inverses_.reserve(f.weights_.size());
  for (const auto& w : f.weights_) {
    if (w.rows() != dim || w.cols() != dim)
      throw std::invalid_argument("mixing: layers must be square of size dim");
    f.inverses_.push_back(w.inverse());
  }
  return f;
}

namespace {

inline double lrelu(double x) {
  return x >= 0.0 ? x : MixingFunction::kSlope * x;
}
inline double lrelu_inv(double y) {
  return y >= 0.0 ? y : y / MixingFunction::kSlope;
}

}  // namespace

Vec MixingFunction::apply(const Vec& z) const {
  if (dim_ == 0) return z;
  if (z.size() != dim_) throw std::invalid_argument("mixing: dimension mismatch");
  Vec x = z;
  for (int k = 0; k < depth(); ++k) {
    x = weights_[k] * x + biases_[k];
    if (k + 1 < depth()) x = x.unaryExpr([](double v) { return lrelu(v); });
  }
  return x;
}

Vec MixingFunction::invert(const Vec& x) const {
  if (dim_ == 0) return x;
  if (x.size() != dim_) throw std::invalid_argument("mixing: dimension mismatch");
  Vec z = x;
  for (int k = depth() - 1; k >= 0; --k) {
    if (k + 1 < depth()) z = z.unaryExpr([](double v) { return lrelu_inv(v); });
    z = inverses_[k] * (z - biases_[k]);
  }
  return z;
}

Mat MixingFunction::apply(const Mat& z) const {
  if (dim_ == 0) return z;
  if (z.cols() != dim_) throw std::invalid_argument("mixing: dimension mismatch");
  Mat x = z;
  for (int k = 0; k < depth(); ++k) {
    x = (x * weights_[k].transpose()).rowwise() + biases_[k].transpose();
    if (k + 1 < depth()) x = x.unaryExpr([](double v) { return lrelu(v); });
  }
  return x;
}

Mat MixingFunction::invert(const Mat& x) const {
  if (dim_ == 0) return x;
  if (x.cols() != dim_) throw std::invalid_argument("mixing: dimension mismatch");
  Mat z = x;
  for (int k = depth() - 1; k >= 0; --k) {
    if (k + 1 < depth()) z = z.unaryExpr([](double v) { return lrelu_inv(v); });
    z = (z.rowwise() - biases_[k].transpose()) * inverses_[k].transpose();
  }
  return z;
}

MixingFunction build_mixing(int dim, int depth, RngStream& rng) {
  if (dim < 1) throw std::invalid_argument("build_mixing: dim >= 1");
  if (depth < 0) throw std::invalid_argument("build_mixing: depth >= 0");
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  for (int k = 0; k < depth; ++k) {
    Mat g = rng.normal_matrix(dim, dim);
    Eigen::JacobiSVD<Mat> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    // replace singular values with draws in [0.5, 2] to bound the condition
    // number; inversion stays well-posed at any depth
    Vec s(dim);
    for (int i = 0; i < dim; ++i) s[i] = rng.uniform(0.5, 2.0);
    weights.push_back(svd.matrixU() * s.asDiagonal() *
                      svd.matrixV().transpose());
    Vec bias(dim);
    for (int i = 0; i < dim; ++i) bias[i] = rng.normal(0.0, 0.1);
    biases.push_back(bias);
  }
  return MixingFunction::from_layers(depth == 0 ? 0 : dim, std::move(weights),
                                     std::move(biases));
}

// ---- Darmois oracle ---------------------------------------------------------

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

}  // namespace

DarmoisOracle::DarmoisOracle(const GaussianLVMParams& params,
                             const MixingFunction& mixing)
    : mixing_(mixing) {
  params.validate();
  const auto& spec = params.spec;
  const bool b_zero = params.b.cwiseAbs().maxCoeff() == 0.0;
  if (params.style_mode != StyleMode::kPerfect) {
    if (!b_zero || !block_diagonal(params.sigma_s, spec))
      throw std::invalid_argument(
          "darmois_oracle: requires perfect interventions, or B = 0 with "
          "block-diagonal sigma_s (assumption of joint independence)");
  }
  if (mixing_.dim() != 0 && mixing_.dim() != spec.total())
    throw std::invalid_argument("darmois_oracle: mixing dimension mismatch");

  BlockCdf content;
  content.offset = 0;
  content.dim = spec.d0;
  content.mu = Vec::Zero(spec.d0);
  content.whiten = Mat(cholesky_or_throw(params.sigma_c, "sigma_c"))
                       .triangularView<Eigen::Lower>()
                       .solve(Mat::Identity(spec.d0, spec.d0));
  blocks_.push_back(std::move(content));

  for (int m = 1; m <= spec.num_styles(); ++m) {
    const int off = spec.style_offset(m);
    const int dl = spec.style_dims[m - 1];
    BlockCdf blk;
    blk.offset = spec.d0 + off;
    blk.dim = dl;
    if (params.style_mode == StyleMode::kPerfect) {
      blk.mu = Vec::Zero(dl);
      blk.whiten = Mat::Identity(dl, dl);
    } else {
      // B = 0: marginal of the perturbed block is N(a_m, Sigma_s + Sigma_st)
      blk.mu = params.a.segment(off, dl);
      const Mat cov = params.sigma_s.block(off, off, dl, dl) +
                      params.sigma_stilde.block(off, off, dl, dl);
      blk.whiten = Mat(cholesky_or_throw(cov, "style block covariance"))
                       .triangularView<Eigen::Lower>()
                       .solve(Mat::Identity(dl, dl));
    }
    blocks_.push_back(std::move(blk));
  }
}

Vec DarmoisOracle::encode(int space, const Vec& x) const {
  if (space < 0 || space >= num_spaces())
    throw std::invalid_argument("darmois encode: space out of range");
  const auto& blk = blocks_[space];
  const Vec z = mixing_.invert(x);
  const Vec w = blk.whiten * (z.segment(blk.offset, blk.dim) - blk.mu);
  return w.unaryExpr([](double v) { return std_normal_cdf(v); });
}

Mat DarmoisOracle::encode(int space, const Mat& x) const {
  if (space < 0 || space >= num_spaces())
    throw std::invalid_argument("darmois encode: space out of range");
  const auto& blk = blocks_[space];
  const Mat z = mixing_.invert(x);
  const Mat w = (z.middleCols(blk.offset, blk.dim).rowwise() -
                 blk.mu.transpose()) *
                blk.whiten.transpose();
  return w.unaryExpr([](double v) { return std_normal_cdf(v); });
}

Mat DarmoisOracle::encode_all(const Mat& x) const {
  int d = 0;
  for (const auto& blk : blocks_) d += blk.dim;
  Mat out(x.rows(), d);
  int col = 0;
  for (int m = 0; m < num_spaces(); ++m) {
    out.middleCols(col, blocks_[m].dim) = encode(m, x);
    col += blocks_[m].dim;
  }
  return out;
}

DarmoisOracle darmois_oracle(const GaussianLVMParams& params,
                             const MixingFunction& mixing) {
  return DarmoisOracle(params, mixing);
}

// ---- serialization ----------------------------------------------------------

namespace {

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const json& j) {
  const auto rows = j.size();
  if (rows == 0) return Mat(0, 0);
  Mat m(rows, j.at(0).size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < j.at(i).size(); ++k)
      m(i, k) = j.at(i).at(k).get<double>();
  return m;
}

json vec_to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vec vec_from_json(const json& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

void expect_schema(const json& j, const std::string& tag) {
  if (!j.contains("schema") || j.at("schema").get<std::string>() != tag)
    throw std::invalid_argument("expected schema tag " + tag);
}

}  // namespace

std::string to_json(const GaussianLVMParams& params) {
  json j;
  j["schema"] = "dissl.lvm.params/1";
  j["d0"] = params.spec.d0;
  j["style_dims"] = params.spec.style_dims;
  j["sigma_c"] = mat_to_json(params.sigma_c);
  j["a"] = vec_to_json(params.a);
  j["b"] = mat_to_json(params.b);
  j["sigma_s"] = mat_to_json(params.sigma_s);
  j["sigma_stilde"] = mat_to_json(params.sigma_stilde);
  j["style_mode"] = to_string(params.style_mode);
  return j.dump(2);
}

GaussianLVMParams params_from_json(const std::string& text) {
  const json j = json::parse(text);
  expect_schema(j, "dissl.lvm.params/1");
  GaussianLVMParams p;
  p.spec.d0 = j.at("d0").get<int>();
  p.spec.style_dims = j.at("style_dims").get<std::vector<int>>();
  p.sigma_c = mat_from_json(j.at("sigma_c"));
  p.a = vec_from_json(j.at("a"));
  p.b = mat_from_json(j.at("b"));
  p.sigma_s = mat_from_json(j.at("sigma_s"));
  p.sigma_stilde = mat_from_json(j.at("sigma_stilde"));
  p.style_mode = style_mode_from_string(j.at("style_mode").get<std::string>());
  p.validate();
  return p;
}

std::string to_json(const MixingFunction& mixing) {
  json j;
  j["schema"] = "dissl.mixing/1";
  j["dim"] = mixing.dim();
  json ws = json::array(), bs = json::array();
  for (const auto& w : mixing.weights()) ws.push_back(mat_to_json(w));
  for (const auto& b : mixing.biases()) bs.push_back(vec_to_json(b));
  j["weights"] = std::move(ws);
  j["biases"] = std::move(bs);
  return j.dump(2);
}

MixingFunction mixing_from_json(const std::string& text) {
  const json j = json::parse(text);
  expect_schema(j, "dissl.mixing/1");
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  for (const auto& w : j.at("weights")) weights.push_back(mat_from_json(w));
  for (const auto& b : j.at("biases")) biases.push_back(vec_from_json(b));
  return MixingFunction::from_layers(j.at("dim").get<int>(), std::move(weights),
                                     std::move(biases));
}

}  // namespace dissl::latentlab
