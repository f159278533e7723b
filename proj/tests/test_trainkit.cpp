#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dissl/latentlab.hpp"
#include "dissl/trainkit.hpp"

namespace tk = dissl::trainkit;
namespace lab = dissl::latentlab;
using dissl::RngStream;
using Mat = Eigen::MatrixXd;

namespace {

tk::LatentPairSource make_source() {
  lab::LatentSpec spec{2, {2}};
  auto params = lab::GaussianLVMParams::standard(spec);
  RngStream rng(100);
  return tk::LatentPairSource(params, lab::build_mixing(spec.total(), 2, rng));
}

tk::TrainConfig small_config(const tk::PairSource& source) {
  tk::TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.steps = 30;
  cfg.space_dims = {3, 2};
  cfg.encoder.input_dim = source.observation_dim();
  cfg.encoder.hidden = {16};
  cfg.encoder.repr_dim = 8;
  cfg.log_every = 5;
  return cfg;
}

/// Emits clean latent-model pairs for `good_steps` calls, then NaNs.
class PoisonedSource final : public tk::PairSource {
 public:
  PoisonedSource(tk::LatentPairSource inner, int good_steps)
      : inner_(std::move(inner)), good_steps_(good_steps) {}

  int observation_dim() const override { return inner_.observation_dim(); }
  int num_style_groups() const override { return inner_.num_style_groups(); }
  void sample_pairs(const std::vector<int>& modes, RngStream& rng, Mat& x,
                    Mat& x_prime) override {
    inner_.sample_pairs(modes, rng, x, x_prime);
    if (++calls_ > good_steps_)
      x(0, 0) = std::numeric_limits<double>::quiet_NaN();
  }
  tk::EvalData eval_data(int n, RngStream& rng) override {
    return inner_.eval_data(n, rng);
  }

 private:
  tk::LatentPairSource inner_;
  int good_steps_;
  int calls_ = 0;
};

}  // namespace

TEST_CASE("assign_modes: cyclic by index, M = 0 allowed") {
  CHECK(tk::assign_modes({0, 1, 2, 3, 4}, 2) ==
        std::vector<int>{0, 1, 2, 0, 1});
  CHECK(tk::assign_modes({10, 11, 12}, 1) == std::vector<int>{0, 1, 0});
  CHECK(tk::assign_modes({0, 1, 2}, 0) == std::vector<int>{0, 0, 0});
  CHECK_THROWS_AS(tk::assign_modes({0}, -1), std::invalid_argument);
}

TEST_CASE("model: shapes, forward, JSON round trip") {
  RngStream rng(1);
  tk::EncoderSpec spec;
  spec.input_dim = 6;
  spec.hidden = {10, 8};
  spec.repr_dim = 7;
  auto model = tk::make_model(spec, {4, 2, 3}, rng);
  CHECK(model.num_spaces() == 3);
  CHECK(model.space_dims() == std::vector<int>{4, 2, 3});

  const Mat x = rng.normal_matrix(5, 6);
  const auto out = tk::forward(model, x);
  CHECK(out.h.rows() == 5);
  CHECK(out.h.cols() == 7);
  REQUIRE(out.z.size() == 3);
  CHECK(out.z[0].cols() == 4);
  CHECK(out.z[2].cols() == 3);

  const auto restored = tk::Model::from_json(model.to_json());
  const auto out2 = tk::forward(restored, x);
  CHECK(out2.h == out.h);
  for (int l = 0; l < 3; ++l) CHECK(out2.z[l] == out.z[l]);
}

TEST_CASE("config: validation catches mismatched space count") {
  auto source = make_source();
  auto cfg = small_config(source);
  CHECK_NOTHROW(cfg.validate(source.num_style_groups()));
  // fewer spaces than style groups is allowed (unmodeled groups are never
  // shared), but more than M + 1 is not
  cfg.space_dims = {3};
  CHECK_NOTHROW(cfg.validate(source.num_style_groups()));
  cfg.space_dims = {3, 2, 2, 2};
  CHECK_THROWS_AS(cfg.validate(source.num_style_groups()),
                  std::invalid_argument);
  cfg.space_dims = {};
  CHECK_THROWS_AS(cfg.validate(source.num_style_groups()),
                  std::invalid_argument);
  cfg = small_config(source);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(source.num_style_groups()),
                  std::invalid_argument);
  cfg = small_config(source);
  cfg.theorem_mode = true;  // requires squashed embeddings
  cfg.encoder.squash_embeddings = false;
  CHECK_THROWS_AS(cfg.validate(source.num_style_groups()),
                  std::invalid_argument);
}

TEST_CASE("train: bit-identical histories across reruns") {
  auto cfg = small_config(make_source());
  cfg.lambda_policy = tk::LambdaPolicy::kAdapted;
  auto s1 = make_source();
  RngStream r1(9);
  const auto a = tk::train(cfg, s1, r1);
  auto s2 = make_source();
  RngStream r2(9);
  const auto b = tk::train(cfg, s2, r2);
  CHECK(a.history.csv() == b.history.csv());
  CHECK(a.model.to_json() == b.model.to_json());
  CHECK(!a.history.records.empty());
  // a different seed produces a different trajectory
  RngStream r3(10);
  auto s3 = make_source();
  const auto c = tk::train(cfg, s3, r3);
  CHECK(c.history.csv() != a.history.csv());
}

TEST_CASE("train: adapted lambdas never decrease") {
  auto cfg = small_config(make_source());
  cfg.lambda_policy = tk::LambdaPolicy::kAdapted;
  cfg.steps = 60;
  auto source = make_source();
  RngStream rng(11);
  const auto result = tk::train(cfg, source, rng);
  const auto& hist = result.history.lambda_state.history;
  REQUIRE(!hist.empty());
  for (std::size_t i = 1; i < hist.size(); ++i)
    for (std::size_t m = 0; m < hist[i].lambdas.size(); ++m)
      CHECK(hist[i].lambdas[m] >= hist[i - 1].lambdas[m]);
}

TEST_CASE("train: fixed policy keeps lambdas at one") {
  auto cfg = small_config(make_source());
  auto source = make_source();
  RngStream rng(12);
  const auto result = tk::train(cfg, source, rng);
  for (double l : result.history.lambda_state.lambdas)
    CHECK(l == 1.0);
}

TEST_CASE("train: non-finite loss raises TrainingError with a checkpoint") {
  auto cfg = small_config(make_source());
  cfg.steps = 200;
  PoisonedSource source(make_source(), 60);
  RngStream rng(13);
  try {
    tk::train(cfg, source, rng);
    FAIL("expected TrainingError");
  } catch (const tk::TrainingError& e) {
    CHECK(!e.last_good_checkpoint.empty());
    const auto ckpt = tk::load_checkpoint(e.last_good_checkpoint);
    CHECK(ckpt.model.num_spaces() == 2);
    CHECK(ckpt.config.steps == cfg.steps);
    // the recovered model still evaluates finitely
    const Mat x = Mat::Random(4, cfg.encoder.input_dim);
    CHECK(tk::forward(ckpt.model, x).h.allFinite());
  }
}

TEST_CASE("checkpoint: config echo round trips") {
  auto source = make_source();
  auto cfg = small_config(source);
  cfg.family = dissl::objectives::Family::kVicreg;
  cfg.lambda_policy = tk::LambdaPolicy::kAdapted;
  cfg.seed = 77;
  RngStream rng(2);
  auto model = tk::make_model(cfg.encoder, cfg.space_dims, rng);
  const auto ckpt = tk::load_checkpoint(tk::save_checkpoint(model, cfg));
  CHECK(ckpt.config.family == cfg.family);
  CHECK(ckpt.config.lambda_policy == cfg.lambda_policy);
  CHECK(ckpt.config.seed == 77);
  CHECK(ckpt.config.space_dims == cfg.space_dims);
  CHECK(ckpt.model.to_json() == model.to_json());
  // unknown version tag is rejected
  CHECK_THROWS(tk::load_checkpoint("{\"schema\":\"bogus/9\"}"));
}

TEST_CASE("evaluation: report is total on an untrained model") {
  auto source = make_source();
  auto cfg = small_config(source);
  RngStream rng(3);
  auto model = tk::make_model(cfg.encoder, cfg.space_dims, rng);
  RngStream eval_rng(4);
  const auto train_data = source.eval_data(300, eval_rng);
  const auto test_data = source.eval_data(150, eval_rng);
  const auto report =
      tk::identifiability_report(model, train_data, test_data, false);
  CHECK(report.r2.rows() == 2);
  CHECK(report.r2.cols() == 2);
  CHECK(report.r2.allFinite());
  CHECK(report.readout_kind == "linear");
  CHECK(report.ks_pvalues.size() == 5);  // 3 + 2 embedding dims
  CHECK(report.max_abs_correlation >= 0.0);
  CHECK(report.max_abs_correlation <= 1.0);

  // deterministic given identical inputs
  const auto report2 =
      tk::identifiability_report(model, train_data, test_data, false);
  CHECK(report2.to_json() == report.to_json());
}

TEST_CASE("evaluation: oracle encoders slot into the report") {
  lab::LatentSpec spec{2, {2}};
  auto params =
      lab::GaussianLVMParams::standard(spec, lab::StyleMode::kPerfect);
  RngStream rng(5);
  const auto mixing = lab::build_mixing(spec.total(), 2, rng);
  tk::LatentPairSource source(params, mixing);
  const auto oracle = lab::darmois_oracle(params, mixing);
  const auto encoders = tk::oracle_encoders(oracle);
  REQUIRE(encoders.size() == 2);
  RngStream eval_rng(6);
  const auto train_data = source.eval_data(800, eval_rng);
  const auto test_data = source.eval_data(400, eval_rng);
  const auto report =
      tk::identifiability_report(encoders, train_data, test_data, true);
  // the oracle recovers each block in its own space and nothing else
  CHECK(report.r2(0, 0) > 0.95);
  CHECK(report.r2(1, 1) > 0.95);
  CHECK(report.max_leakage < 0.2);
}
