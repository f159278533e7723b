#include "dissl/trainkit.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dissl/stats.hpp"

namespace dissl::trainkit {

using nlohmann::json;

std::vector<int> assign_modes(const std::vector<long>& batch_indices, int M) {
  if (M < 0) throw std::invalid_argument("assign_modes: M >= 0");
  if (batch_indices.empty())
    throw std::invalid_argument("assign_modes: empty batch");
  std::vector<int> modes(batch_indices.size());
  for (std::size_t i = 0; i < batch_indices.size(); ++i) {
    if (batch_indices[i] < 0)
      throw std::invalid_argument("assign_modes: negative index");
    modes[i] = static_cast<int>(batch_indices[i] % (M + 1));
  }
  return modes;
}

void EncoderSpec::validate() const {
  if (repr_dim < 1) throw std::invalid_argument("encoder: repr_dim >= 1");
  for (int w : hidden)
    if (w < 1) throw std::invalid_argument("encoder: hidden widths >= 1");
}

std::vector<int> Model::space_dims() const {
  std::vector<int> dims;
  dims.reserve(projectors.size());
  for (const auto& p : projectors) dims.push_back(p.output_dim());
  return dims;
}

std::string Model::to_json() const {
  json j;
  j["schema"] = "dissl.model/1";
  j["encoder"] = json::parse(encoder.to_json());
  json projs = json::array();
  for (const auto& p : projectors) projs.push_back(json::parse(p.to_json()));
  j["projectors"] = std::move(projs);
  return j.dump();
}

Model Model::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("schema").get<std::string>() != "dissl.model/1")
    throw std::invalid_argument("model: unexpected schema tag");
  Model m;
  m.encoder = Mlp::from_json(j.at("encoder").dump());
  for (const auto& pj : j.at("projectors"))
    m.projectors.push_back(Mlp::from_json(pj.dump()));
  return m;
}

Model make_model(const EncoderSpec& spec, const std::vector<int>& space_dims,
                 RngStream& rng) {
  spec.validate();
  if (spec.input_dim < 1) throw std::invalid_argument("model: input_dim >= 1");
  if (space_dims.empty()) throw std::invalid_argument("model: no spaces");
  Model m;
  std::vector<int> enc_widths = spec.hidden;
  enc_widths.push_back(spec.repr_dim);
  m.encoder =
      Mlp::make(spec.input_dim, enc_widths, spec.activation, false, rng);
  for (int d : space_dims) {
    if (d < 1) throw std::invalid_argument("model: space dims >= 1");
    m.projectors.push_back(Mlp::make(spec.repr_dim, {spec.repr_dim, d},
                                     spec.activation, spec.squash_embeddings,
                                     rng));
  }
  return m;
}

ForwardResult forward(const Model& model, const Mat& views) {
  ForwardResult out;
  out.h = model.encoder.forward(views);
  out.z.reserve(model.projectors.size());
  for (const auto& p : model.projectors) out.z.push_back(p.forward(out.h));
  return out;
}

// ---- latent pair source -----------------------------------------------------

LatentPairSource::LatentPairSource(latentlab::GaussianLVMParams params,
                                   latentlab::MixingFunction mixing)
    : params_(std::move(params)), mixing_(std::move(mixing)) {
  params_.validate();
  if (mixing_.dim() != 0 && mixing_.dim() != params_.spec.total())
    throw std::invalid_argument("latent source: mixing dimension mismatch");
}

int LatentPairSource::observation_dim() const { return params_.spec.total(); }

int LatentPairSource::num_style_groups() const {
  return params_.spec.num_styles();
}

void LatentPairSource::sample_pairs(const std::vector<int>& modes,
                                    RngStream& rng, Mat& x, Mat& x_prime) {
  const int n = static_cast<int>(modes.size());
  const int d = observation_dim();
  x.resize(n, d);
  x_prime.resize(n, d);
  for (int i = 0; i < n; ++i) {
    const auto base = latentlab::sample_latent(params_, rng);
    const auto triple = latentlab::perturb(base, modes[i], params_, rng);
    x.row(i) = mixing_.apply(triple.z_tilde.concat()).transpose();
    x_prime.row(i) = mixing_.apply(triple.z_tilde_prime.concat()).transpose();
  }
}

EvalData LatentPairSource::eval_data(int n, RngStream& rng) {
  EvalData data;
  const auto& spec = params_.spec;
  data.x.resize(n, observation_dim());
  data.blocks.assign(spec.num_styles() + 1, Mat());
  data.blocks[0].resize(n, spec.d0);
  for (int m = 1; m <= spec.num_styles(); ++m)
    data.blocks[m].resize(n, spec.style_dims[m - 1]);
  for (int i = 0; i < n; ++i) {
    const auto sample = latentlab::sample_latent(params_, rng);
    data.x.row(i) = mixing_.apply(sample.concat()).transpose();
    data.blocks[0].row(i) = sample.c.transpose();
    for (int m = 1; m <= spec.num_styles(); ++m)
      data.blocks[m].row(i) =
          sample.s.segment(spec.style_offset(m), spec.style_dims[m - 1])
              .transpose();
  }
  data.target_names.push_back("content");
  for (int m = 1; m <= spec.num_styles(); ++m)
    data.target_names.push_back("style_" + std::to_string(m));
  return data;
}

// ---- sprite pair source -----------------------------------------------------

SpritePairSource::SpritePairSource(int dataset_size,
                                   spriteworld::TransformGroups groups,
                                   spriteworld::Strength strength,
                                   std::uint64_t dataset_seed, int stride)
    : groups_(std::move(groups)), strength_(strength), stride_(stride) {
  if (dataset_size < 1)
    throw std::invalid_argument("sprite source: dataset_size >= 1");
  if (groups_.empty()) throw std::invalid_argument("sprite source: no groups");
  if (stride_ < 1) throw std::invalid_argument("sprite source: stride >= 1");
  RngStream rng(dataset_seed);
  factors_.reserve(dataset_size);
  for (int i = 0; i < dataset_size; ++i)
    factors_.push_back(spriteworld::sample_factors(rng));
}

int SpritePairSource::observation_dim() const {
  return static_cast<int>(
      spriteworld::SpriteImage().features(stride_).size());
}

int SpritePairSource::num_style_groups() const {
  return static_cast<int>(groups_.size());
}

void SpritePairSource::sample_pairs(const std::vector<int>& modes,
                                    RngStream& rng, Mat& x, Mat& x_prime) {
  const int n = static_cast<int>(modes.size());
  x.resize(n, observation_dim());
  x_prime.resize(n, observation_dim());
  for (int i = 0; i < n; ++i) {
    const auto& base = factors_[rng.uniform_int(factors_.size())];
    const auto pair = spriteworld::make_structured_pair(base, modes[i],
                                                        groups_, strength_,
                                                        rng);
    x.row(i) = pair.view_a.features(stride_).transpose();
    x_prime.row(i) = pair.view_b.features(stride_).transpose();
  }
}

EvalData SpritePairSource::eval_data(int n, RngStream& rng) {
  EvalData data;
  data.categorical = true;
  data.x.resize(n, observation_dim());
  data.factors.assign(6, IntVec(n));
  for (int i = 0; i < n; ++i) {
    // fresh factor draws (held out from the training pool almost surely)
    const auto f = spriteworld::sample_factors(rng);
    data.x.row(i) = spriteworld::render(f).features(stride_).transpose();
    for (int t = 0; t < 6; ++t) data.factors[t][i] = f.factor(t);
  }
  for (int t = 0; t < 6; ++t) {
    data.cardinalities.push_back(spriteworld::FactorTuple::kCardinalities[t]);
    data.target_names.push_back(spriteworld::FactorTuple::kNames[t]);
  }
  return data;
}

// ---- training ---------------------------------------------------------------

void TrainConfig::validate(int num_style_groups) const {
  encoder.validate();
  if (num_style_groups < 1)
    throw std::invalid_argument("train: need at least one style group");
  const int num_spaces = static_cast<int>(space_dims.size());
  if (num_spaces < 1 || num_spaces > num_style_groups + 1)
    throw std::invalid_argument(
        "train: space_dims must have between 1 and M + 1 entries");
  for (int d : space_dims)
    if (d < 1) throw std::invalid_argument("train: space dims >= 1");
  if (batch_size < num_spaces || batch_size % num_spaces != 0)
    throw std::invalid_argument(
        "train: batch size must be a positive multiple of M + 1");
  if (steps < 1) throw std::invalid_argument("train: steps >= 1");
  if (lr <= 0.0) throw std::invalid_argument("train: lr > 0");
  if (lr_min_factor <= 0.0 || lr_min_factor > 1.0)
    throw std::invalid_argument("train: lr_min_factor in (0, 1]");
  if (cadence < 1) throw std::invalid_argument("train: cadence >= 1");
  if (ema_decay < 0.0 || ema_decay >= 1.0)
    throw std::invalid_argument("train: ema_decay in [0,1)");
  if (theorem_mode && !encoder.squash_embeddings)
    throw std::invalid_argument(
        "train: theorem mode requires squashed embeddings");
}

std::string TrainHistory::csv() const {
  std::ostringstream out;
  out.precision(12);
  if (records.empty()) return "step\n";
  out << "step";
  for (const auto& [key, _] : records.front()) out << "," << key;
  out << "\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << steps[i];
    for (const auto& [_, value] : records[i]) out << "," << value;
    out << "\n";
  }
  return out.str();
}

namespace {

struct ModeLayout {
  std::vector<int> modes;                  // per row
  std::vector<std::vector<int>> row_sets;  // rows belonging to each mode
};

ModeLayout cyclic_modes(long step, int batch, int M) {
  std::vector<long> indices(batch);
  for (int i = 0; i < batch; ++i) indices[i] = step * batch + i;
  ModeLayout layout;
  layout.modes = assign_modes(indices, M);
  layout.row_sets.assign(M + 1, {});
  for (int i = 0; i < batch; ++i) layout.row_sets[layout.modes[i]].push_back(i);
  return layout;
}

objectives::StructuredBatch gather(const ForwardResult& a,
                                   const ForwardResult& b,
                                   const ModeLayout& layout) {
  const int spaces = static_cast<int>(a.z.size());
  objectives::StructuredBatch batch;
  batch.modes.resize(layout.row_sets.size());
  for (std::size_t m = 0; m < layout.row_sets.size(); ++m) {
    const auto& rows = layout.row_sets[m];
    auto& bundle = batch.modes[m];
    bundle.z.resize(spaces);
    bundle.z_prime.resize(spaces);
    for (int l = 0; l < spaces; ++l) {
      bundle.z[l].resize(rows.size(), a.z[l].cols());
      bundle.z_prime[l].resize(rows.size(), a.z[l].cols());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        bundle.z[l].row(r) = a.z[l].row(rows[r]);
        bundle.z_prime[l].row(r) = b.z[l].row(rows[r]);
      }
    }
  }
  return batch;
}

void scatter(const objectives::StructuredGrad& grad, const ModeLayout& layout,
             int batch, std::vector<Mat>& ga, std::vector<Mat>& gb) {
  const int spaces = static_cast<int>(grad.modes.front().z.size());
  ga.assign(spaces, Mat());
  gb.assign(spaces, Mat());
  for (int l = 0; l < spaces; ++l) {
    ga[l] = Mat::Zero(batch, grad.modes.front().z[l].cols());
    gb[l] = Mat::Zero(batch, grad.modes.front().z[l].cols());
  }
  for (std::size_t m = 0; m < layout.row_sets.size(); ++m) {
    const auto& rows = layout.row_sets[m];
    for (int l = 0; l < spaces; ++l)
      for (std::size_t r = 0; r < rows.size(); ++r) {
        ga[l].row(rows[r]) += grad.modes[m].z[l].row(r);
        gb[l].row(rows[r]) += grad.modes[m].z_prime[l].row(r);
      }
  }
}

}  // namespace

TrainResult train(const TrainConfig& config, PairSource& source,
                  RngStream& rng) {
  config.validate(source.num_style_groups());
  const int M = static_cast<int>(config.space_dims.size()) - 1;
  EncoderSpec spec = config.encoder;
  if (spec.input_dim == 0) spec.input_dim = source.observation_dim();
  if (config.theorem_mode && !spec.squash_embeddings)
    throw std::invalid_argument("train: theorem mode requires squashing");

  RngStream init_rng = rng.split(1);
  RngStream data_rng = rng.split(2);
  Model model = make_model(spec, config.space_dims, init_rng);

  AdamOptimizer enc_opt(config.lr);
  std::vector<AdamOptimizer> proj_opts(model.projectors.size(),
                                       AdamOptimizer(config.lr));

  TrainHistory history;
  history.lambda_state = controller::LambdaState::standard(M + 1);
  history.lambda_state.eta = config.eta;
  history.lambda_state.epsilon = config.epsilon;
  history.lambda_state.cadence = config.cadence;

  std::vector<double> ema;   // EMA of per-space invariance readings
  bool ema_ready = false;
  std::string last_good = save_checkpoint(model, config);

  for (long step = 0; step < config.steps; ++step) {
    if (config.lr_min_factor < 1.0) {
      const double progress = static_cast<double>(step) /
                              static_cast<double>(config.steps);
      const double lo = config.lr * config.lr_min_factor;
      const double cur =
          lo + 0.5 * (config.lr - lo) * (1.0 + std::cos(3.14159265358979323846 * progress));
      enc_opt.set_lr(cur);
      for (auto& opt : proj_opts) opt.set_lr(cur);
    }
    const ModeLayout layout = cyclic_modes(step, config.batch_size, M);
    Mat x, x_prime;
    source.sample_pairs(layout.modes, data_rng, x, x_prime);

    Mlp::Cache enc_cache_a, enc_cache_b;
    ForwardResult fa, fb;
    fa.h = model.encoder.forward(x, enc_cache_a);
    fb.h = model.encoder.forward(x_prime, enc_cache_b);
    std::vector<Mlp::Cache> proj_cache_a(model.projectors.size());
    std::vector<Mlp::Cache> proj_cache_b(model.projectors.size());
    for (std::size_t l = 0; l < model.projectors.size(); ++l) {
      fa.z.push_back(model.projectors[l].forward(fa.h, proj_cache_a[l]));
      fb.z.push_back(model.projectors[l].forward(fb.h, proj_cache_b[l]));
    }

    const auto batch = gather(fa, fb, layout);
    objectives::StructuredGrad grad;
    std::map<std::string, double> record;
    double total;
    std::vector<double> invariance_readings;
    if (config.theorem_mode) {
      const auto terms = objectives::theorem_objective_grad(batch, grad);
      total = terms.total;
      invariance_readings = terms.alignment;
      for (std::size_t m = 0; m < terms.alignment.size(); ++m)
        record["align_" + std::to_string(m)] = terms.alignment[m];
      record["entropy"] = terms.entropy_surrogate;
      record["total"] = terms.total;
    } else {
      const auto terms = objectives::structured_loss_grad(
          batch, history.lambda_state.lambdas, config.family, grad);
      total = terms.total;
      invariance_readings = terms.invariance;
      record = terms.flat();
    }

    if (!std::isfinite(total))
      throw TrainingError(
          "training diverged at step " + std::to_string(step),
          last_good);

    std::vector<Mat> gz_a, gz_b;
    scatter(grad, layout, config.batch_size, gz_a, gz_b);

    auto enc_grads = model.encoder.zero_grads();
    Mat gh_a = Mat::Zero(fa.h.rows(), fa.h.cols());
    Mat gh_b = Mat::Zero(fb.h.rows(), fb.h.cols());
    for (std::size_t l = 0; l < model.projectors.size(); ++l) {
      auto proj_grads = model.projectors[l].zero_grads();
      gh_a += model.projectors[l].backward(proj_cache_a[l], gz_a[l],
                                           proj_grads);
      gh_b += model.projectors[l].backward(proj_cache_b[l], gz_b[l],
                                           proj_grads);
      proj_opts[l].step(model.projectors[l], proj_grads);
    }
    model.encoder.backward(enc_cache_a, gh_a, enc_grads);
    model.encoder.backward(enc_cache_b, gh_b, enc_grads);
    enc_opt.step(model.encoder, enc_grads);

    if (!ema_ready) {
      ema = invariance_readings;
      ema_ready = true;
    } else {
      for (std::size_t m = 0; m < ema.size(); ++m)
        ema[m] = config.ema_decay * ema[m] +
                 (1.0 - config.ema_decay) * invariance_readings[m];
    }

    if (config.lambda_policy == LambdaPolicy::kAdapted &&
        !config.theorem_mode && (step + 1) % config.cadence == 0) {
      // SimCLR invariance lives in [-1, 1]; the constraint reads 1 + L^inv.
      std::vector<double> constraint = ema;
      if (config.family == objectives::Family::kSimclr)
        for (double& v : constraint) v += 1.0;
      history.lambda_state =
          controller::update_lambda(history.lambda_state, constraint,
                                    step + 1);
    }

    if (step % config.log_every == 0 || step + 1 == config.steps) {
      for (std::size_t m = 0; m < history.lambda_state.lambdas.size(); ++m)
        record["lambda_" + std::to_string(m)] =
            history.lambda_state.lambdas[m];
      history.steps.push_back(step);
      history.records.push_back(std::move(record));
    }
    if (step % 50 == 0) last_good = save_checkpoint(model, config);
  }

  return {std::move(model), std::move(history)};
}

// ---- config + checkpoint serialization --------------------------------------

std::string to_json(const TrainConfig& config) {
  json j;
  j["schema"] = "dissl.train_config/1";
  j["family"] = objectives::to_string(config.family);
  j["lambda_policy"] =
      config.lambda_policy == LambdaPolicy::kAdapted ? "adapted" : "fixed";
  j["theorem_mode"] = config.theorem_mode;
  j["batch_size"] = config.batch_size;
  j["steps"] = config.steps;
  j["lr"] = config.lr;
  j["lr_min_factor"] = config.lr_min_factor;
  j["seed"] = config.seed;
  j["space_dims"] = config.space_dims;
  j["encoder"] = {{"input_dim", config.encoder.input_dim},
                  {"hidden", config.encoder.hidden},
                  {"repr_dim", config.encoder.repr_dim},
                  {"activation", trainkit::to_string(config.encoder.activation)},
                  {"squash_embeddings", config.encoder.squash_embeddings}};
  j["eta"] = config.eta;
  j["epsilon"] = config.epsilon;
  j["cadence"] = config.cadence;
  j["ema_decay"] = config.ema_decay;
  j["log_every"] = config.log_every;
  return j.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("schema").get<std::string>() != "dissl.train_config/1")
    throw std::invalid_argument("train config: unexpected schema tag");
  TrainConfig c;
  c.family = objectives::family_from_string(j.at("family").get<std::string>());
  c.lambda_policy = j.at("lambda_policy").get<std::string>() == "adapted"
                        ? LambdaPolicy::kAdapted
                        : LambdaPolicy::kFixed;
  c.theorem_mode = j.at("theorem_mode").get<bool>();
  c.batch_size = j.at("batch_size").get<int>();
  c.steps = j.at("steps").get<int>();
  c.lr = j.at("lr").get<double>();
  c.lr_min_factor = j.value("lr_min_factor", 1.0);
  c.seed = j.at("seed").get<std::uint64_t>();
  c.space_dims = j.at("space_dims").get<std::vector<int>>();
  const auto& e = j.at("encoder");
  c.encoder.input_dim = e.at("input_dim").get<int>();
  c.encoder.hidden = e.at("hidden").get<std::vector<int>>();
  c.encoder.repr_dim = e.at("repr_dim").get<int>();
  c.encoder.activation =
      activation_from_string(e.at("activation").get<std::string>());
  c.encoder.squash_embeddings = e.at("squash_embeddings").get<bool>();
  c.eta = j.at("eta").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.cadence = j.at("cadence").get<int>();
  c.ema_decay = j.at("ema_decay").get<double>();
  c.log_every = j.at("log_every").get<int>();
  return c;
}

std::string save_checkpoint(const Model& model, const TrainConfig& config) {
  json j;
  j["schema"] = "dissl.checkpoint/1";
  j["model"] = json::parse(model.to_json());
  j["config"] = json::parse(to_json(config));
  return j.dump();
}

Checkpoint load_checkpoint(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("schema").get<std::string>() != "dissl.checkpoint/1")
    throw std::invalid_argument("checkpoint: unexpected schema tag");
  return {Model::from_json(j.at("model").dump()),
          train_config_from_json(j.at("config").dump())};
}

// ---- evaluation -------------------------------------------------------------

std::string EvalReport::to_json() const {
  json j;
  j["schema"] = "dissl.eval_report/1";
  j["space_names"] = space_names;
  j["target_names"] = target_names;
  json rows = json::array();
  for (Eigen::Index i = 0; i < r2.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < r2.cols(); ++c) row.push_back(r2(i, c));
    rows.push_back(std::move(row));
  }
  j["r2"] = std::move(rows);
  j["readout_kind"] = readout_kind;
  j["max_leakage"] = max_leakage;
  json kp = json::array();
  for (Eigen::Index i = 0; i < ks_pvalues.size(); ++i)
    kp.push_back(ks_pvalues[i]);
  j["ks_pvalues"] = std::move(kp);
  j["max_abs_correlation"] = max_abs_correlation;
  return j.dump(2);
}

EvalReport identifiability_report(const std::vector<SpaceEncoder>& spaces,
                                  const EvalData& train_data,
                                  const EvalData& test_data, bool nonlinear) {
  if (spaces.empty()) throw std::invalid_argument("report: no spaces");
  if (train_data.categorical != test_data.categorical ||
      train_data.num_targets() != test_data.num_targets())
    throw std::invalid_argument("report: train/test target mismatch");
  EvalReport report;
  report.readout_kind = nonlinear ? "nonlinear" : "linear";
  const int S = static_cast<int>(spaces.size());
  const int T = train_data.num_targets();
  report.r2.resize(S, T);
  report.target_names = train_data.target_names;

  Eigen::Index concat_cols = 0;
  std::vector<Mat> test_embeddings(S);
  for (int s = 0; s < S; ++s) {
    report.space_names.push_back("Z_" + std::to_string(s));
    const Mat e_train = spaces[s](train_data.x);
    test_embeddings[s] = spaces[s](test_data.x);
    concat_cols += test_embeddings[s].cols();
    for (int t = 0; t < T; ++t) {
      if (train_data.categorical) {
        report.r2(s, t) = readout_pseudo_r2(
            e_train, train_data.factors[t], test_embeddings[s],
            test_data.factors[t], train_data.cardinalities[t]);
      } else {
        report.r2(s, t) =
            readout_r2(e_train, train_data.blocks[t], test_embeddings[s],
                       test_data.blocks[t], nonlinear);
      }
    }
  }

  if (S == T) {
    double leak = 0.0;
    for (int s = 0; s < S; ++s)
      for (int t = 0; t < T; ++t)
        if (s != t) leak = std::max(leak, report.r2(s, t));
    report.max_leakage = leak;
  }

  Mat concat(test_data.x.rows(), concat_cols);
  Eigen::Index at = 0;
  for (int s = 0; s < S; ++s) {
    concat.middleCols(at, test_embeddings[s].cols()) = test_embeddings[s];
    at += test_embeddings[s].cols();
  }
  report.ks_pvalues.resize(concat.cols());
  for (Eigen::Index c = 0; c < concat.cols(); ++c) {
    std::vector<double> col(concat.rows());
    for (Eigen::Index i = 0; i < concat.rows(); ++i) col[i] = concat(i, c);
    const double d = stats::ks_statistic_uniform01(std::move(col));
    report.ks_pvalues[c] = stats::ks_pvalue(d, concat.rows());
  }
  report.max_abs_correlation = stats::max_abs_offdiag_correlation(concat);
  return report;
}

EvalReport identifiability_report(const Model& model, const EvalData& train,
                                  const EvalData& test, bool nonlinear) {
  std::vector<SpaceEncoder> spaces;
  for (int l = 0; l < model.num_spaces(); ++l)
    spaces.push_back([&model, l](const Mat& x) {
      return forward(model, x).z[l];
    });
  return identifiability_report(spaces, train, test, nonlinear);
}

std::vector<SpaceEncoder> oracle_encoders(
    const latentlab::DarmoisOracle& oracle) {
  std::vector<SpaceEncoder> spaces;
  for (int m = 0; m < oracle.num_spaces(); ++m)
    spaces.push_back([&oracle, m](const Mat& x) { return oracle.encode(m, x); });
  return spaces;
}

}  // namespace dissl::trainkit
