#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dissl/controller.hpp"
#include "dissl/latentlab.hpp"
#include "dissl/mlp.hpp"
#include "dissl/objectives.hpp"
#include "dissl/readout.hpp"
#include "dissl/spriteworld.hpp"

namespace dissl::trainkit {

/// Mode for element l is l mod (M+1).
std::vector<int> assign_modes(const std::vector<long>& batch_indices, int M);

/// Backbone architecture: 3-layer MLP by default (two hidden layers plus the
/// representation layer).
struct EncoderSpec {
  int input_dim = 0;
  std::vector<int> hidden{64, 64};
  int repr_dim = 64;
  Activation activation = Activation::kLeakyRelu;
  /// Logistic squashing of projector outputs into (0,1); required whenever
  /// the theorem-verification objective is used.
  bool squash_embeddings = false;

  void validate() const;
};

/// Shared backbone plus one projector per embedding space.
struct Model {
  Mlp encoder;
  std::vector<Mlp> projectors;

  int num_spaces() const { return static_cast<int>(projectors.size()); }
  std::vector<int> space_dims() const;

  std::string to_json() const;
  static Model from_json(const std::string& text);
};

Model make_model(const EncoderSpec& spec, const std::vector<int>& space_dims,
                 RngStream& rng);

struct ForwardResult {
  Mat h;                // n x repr_dim
  std::vector<Mat> z;   // per space: n x d_l
};

/// Representation plus per-space embeddings for a batch of views (rows).
ForwardResult forward(const Model& model, const Mat& views);

// ---- data sources -----------------------------------------------------------

/// Labelled evaluation set: clean observations plus ground-truth targets,
/// either continuous blocks (content, s_1, ..) or categorical factors.
struct EvalData {
  Mat x;
  std::vector<Mat> blocks;          // continuous targets, if !categorical
  std::vector<IntVec> factors;      // categorical targets, if categorical
  std::vector<int> cardinalities;   // per categorical factor
  std::vector<std::string> target_names;
  bool categorical = false;

  int num_targets() const {
    return categorical ? static_cast<int>(factors.size())
                       : static_cast<int>(blocks.size());
  }
};

/// Produces mode-tagged view pairs for training and labelled clean data for
/// evaluation. Implementations are pure given the RNG stream.
class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual int observation_dim() const = 0;
  virtual int num_style_groups() const = 0;  // M
  virtual void sample_pairs(const std::vector<int>& modes, RngStream& rng,
                            Mat& x, Mat& x_prime) = 0;
  virtual EvalData eval_data(int n, RngStream& rng) = 0;
};

/// Gaussian LVM + mixing observations (vector-space experiments).
class LatentPairSource final : public PairSource {
 public:
  LatentPairSource(latentlab::GaussianLVMParams params,
                   latentlab::MixingFunction mixing);

  int observation_dim() const override;
  int num_style_groups() const override;
  void sample_pairs(const std::vector<int>& modes, RngStream& rng, Mat& x,
                    Mat& x_prime) override;
  EvalData eval_data(int n, RngStream& rng) override;

  const latentlab::GaussianLVMParams& params() const { return params_; }
  const latentlab::MixingFunction& mixing() const { return mixing_; }

 private:
  latentlab::GaussianLVMParams params_;
  latentlab::MixingFunction mixing_;
};

/// Procedural sprite dataset with structured image augmentations. Views are
/// rendered on the fly; `stride` subsamples pixels before the encoder.
class SpritePairSource final : public PairSource {
 public:
  SpritePairSource(int dataset_size, spriteworld::TransformGroups groups,
                   spriteworld::Strength strength, std::uint64_t dataset_seed,
                   int stride = 2);

  int observation_dim() const override;
  int num_style_groups() const override;
  void sample_pairs(const std::vector<int>& modes, RngStream& rng, Mat& x,
                    Mat& x_prime) override;
  EvalData eval_data(int n, RngStream& rng) override;

 private:
  std::vector<spriteworld::FactorTuple> factors_;
  spriteworld::TransformGroups groups_;
  spriteworld::Strength strength_;
  int stride_;
  long cursor_ = 0;
};

// ---- training ---------------------------------------------------------------

enum class LambdaPolicy { kFixed, kAdapted };

struct TrainConfig {
  objectives::Family family = objectives::Family::kSimclr;
  LambdaPolicy lambda_policy = LambdaPolicy::kFixed;
  bool theorem_mode = false;
  int batch_size = 512;
  int steps = 2000;
  double lr = 1e-3;
  /// Cosine decay of the learning rate to lr * lr_min_factor over the run;
  /// 1.0 keeps the rate constant.
  double lr_min_factor = 1.0;
  std::uint64_t seed = 0;
  // d_0 .. d_M for the modeled modes; may list fewer spaces than the source
  // has style groups (unmodeled groups are then never shared across views, so
  // a single entry yields the content-only setting where every pair is mode 0)
  std::vector<int> space_dims;
  EncoderSpec encoder;
  // dual-ascent settings
  double eta = 0.05;
  double epsilon = 0.01;
  int cadence = 10;
  double ema_decay = 0.9;
  int log_every = 10;

  void validate(int num_style_groups) const;
};

struct TrainHistory {
  std::vector<long> steps;
  std::vector<std::map<std::string, double>> records;
  controller::LambdaState lambda_state;

  std::string csv() const;
};

struct TrainResult {
  Model model;
  TrainHistory history;
};

/// Thrown on non-finite loss; carries the last finite checkpoint.
struct TrainingError : std::runtime_error {
  TrainingError(const std::string& what, std::string checkpoint)
      : std::runtime_error(what), last_good_checkpoint(std::move(checkpoint)) {}
  std::string last_good_checkpoint;
};

TrainResult train(const TrainConfig& config, PairSource& source,
                  RngStream& rng);

std::string to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);

/// Versioned checkpoint: model parameters plus a TrainConfig echo.
struct Checkpoint {
  Model model;
  TrainConfig config;
};
std::string save_checkpoint(const Model& model, const TrainConfig& config);
Checkpoint load_checkpoint(const std::string& text);

// ---- evaluation -------------------------------------------------------------

struct EvalReport {
  std::vector<std::string> space_names;
  std::vector<std::string> target_names;
  Mat r2;                        // spaces x targets
  std::string readout_kind;      // "linear" or "nonlinear"
  double max_leakage = 0.0;      // max off-diagonal cell (square reports)
  Vec ks_pvalues;                // per concatenated-embedding dimension
  double max_abs_correlation = 0.0;

  std::string to_json() const;
};

using SpaceEncoder = std::function<Mat(const Mat&)>;

/// r2 of every embedding space against every ground-truth target. For square
/// layouts (one target block per space) the diagonal is the own-block score
/// and off-diagonal cells are leakage. Uniformity statistics are computed on
/// the concatenated embeddings of the test split.
EvalReport identifiability_report(const std::vector<SpaceEncoder>& spaces,
                                  const EvalData& train, const EvalData& test,
                                  bool nonlinear);
EvalReport identifiability_report(const Model& model, const EvalData& train,
                                  const EvalData& test, bool nonlinear);

/// Per-space encoders backed by the closed-form CDF oracle.
std::vector<SpaceEncoder> oracle_encoders(
    const latentlab::DarmoisOracle& oracle);

}  // namespace dissl::trainkit
