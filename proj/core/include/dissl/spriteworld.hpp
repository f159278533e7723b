#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dissl/rng.hpp"

namespace dissl::spriteworld {

/// Ground-truth factor indices and their cardinalities.
struct FactorTuple {
  int color = 0;        // 0..9
  int shape = 0;        // 0 square, 1 ellipse, 2 heart
  int scale = 0;        // 0..5
  int orientation = 0;  // 0..39
  int pos_x = 0;        // 0..31
  int pos_y = 0;        // 0..31

  static constexpr std::array<int, 6> kCardinalities{10, 3, 6, 40, 32, 32};
  static constexpr std::array<const char*, 6> kNames{
      "color", "shape", "scale", "orientation", "pos_x", "pos_y"};

  int factor(int index) const;
  void validate() const;  // throws std::invalid_argument
};

/// H x W x 3 intensities in [0,1]; background pixels are exactly 0.
struct SpriteImage {
  static constexpr int kSize = 64;

  std::vector<double> pixels;  // row-major (y, x, channel)

  SpriteImage() : pixels(kSize * kSize * 3, 0.0) {}

  double& at(int y, int x, int c) { return pixels[(y * kSize + x) * 3 + c]; }
  double at(int y, int x, int c) const {
    return pixels[(y * kSize + x) * 3 + c];
  }

  /// Foreground centroid (x, y) weighted by pixel intensity.
  std::pair<double, double> centroid() const;
  /// Number of pixels with any nonzero channel.
  int foreground_count() const;
  /// Flattened pixel vector, optionally strided (stride 2 keeps every other
  /// row/column; used as a cheap encoder front end).
  Eigen::VectorXd features(int stride = 1) const;
};

/// Continuous parameters the renderer consumes; atomic transforms act here.
struct RenderParams {
  int shape = 0;
  double hue = 0.0;        // [0,1), circular
  double half_size = 8.0;  // px
  double angle = 0.0;      // radians
  double cx = 32.0;        // px
  double cy = 32.0;

  static RenderParams from_factors(const FactorTuple& f);
};

enum class TransformKind { kColorJitter, kRotation, kRescale, kTranslate };
enum class Strength { kWeak, kMedium, kStrong };

TransformKind transform_kind_from_string(const std::string& s);
std::string to_string(TransformKind kind);
Strength strength_from_string(const std::string& s);
std::string to_string(Strength s);

/// One sampled transformation; params depend on kind (hue shift, angle,
/// scale factor, or (dx, dy)).
struct AtomicTransform {
  TransformKind kind = TransformKind::kColorJitter;
  Strength strength = Strength::kWeak;
  std::vector<double> params;
};

/// Half-ranges per strength, as shipped with the package (hue shift, rotation
/// radians, rescale fraction, translate px). Nested: weak < medium < strong.
struct StrengthRanges {
  double hue_shift;
  double rotation;
  double rescale;
  double translate;
};
StrengthRanges strength_ranges(Strength s);
/// Machine-readable copy of the range table.
std::string strength_table_json();

/// Transformation grouping: group m (1-based mode m) is a list of atomic
/// kinds whose parameters are shared jointly.
using TransformGroups = std::vector<std::vector<TransformKind>>;

/// Appearance/spatial split used by the two-space sprite experiment.
TransformGroups default_groups_m2();
/// Every kind, one flat group list used for single-space runs.
TransformGroups all_kinds_as_groups();

struct StructuredViewPair {
  int mode = 0;
  SpriteImage view_a;
  SpriteImage view_b;
  std::vector<AtomicTransform> transforms_a;
  std::vector<AtomicTransform> transforms_b;
};

// ---- operations -------------------------------------------------------------

/// Deterministic bitmap for a factor tuple.
SpriteImage render(const FactorTuple& factors);
SpriteImage render(const RenderParams& params);

AtomicTransform sample_atomic(TransformKind kind, Strength strength,
                              RngStream& rng);

/// Apply a transform to the renderer's continuous parameters.
RenderParams apply_transform(const RenderParams& params,
                             const AtomicTransform& t);

/// Two views of the same base factors; the transforms of group `mode` (>= 1)
/// share parameters bit-exactly, everything else is drawn independently.
/// Composition order is the group order, identical for both views.
StructuredViewPair make_structured_pair(const FactorTuple& factors, int mode,
                                        const TransformGroups& groups,
                                        Strength strength, RngStream& rng);

FactorTuple sample_factors(RngStream& rng);

std::vector<std::pair<FactorTuple, SpriteImage>> build_dataset(int n,
                                                               RngStream& rng);

/// Writes factors.csv, images.u8 (n x 64 x 64 x 3 bytes, row-major) and
/// strengths.json into `dir`.
void export_dataset(
    const std::string& dir,
    const std::vector<std::pair<FactorTuple, SpriteImage>>& dataset);

}  // namespace dissl::spriteworld
