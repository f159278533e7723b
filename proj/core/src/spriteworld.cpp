#include "dissl/spriteworld.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace dissl::spriteworld {

namespace fs = std::filesystem;

// ---- factors ----------------------------------------------------------------

int FactorTuple::factor(int index) const {
  switch (index) {
    case 0: return color;
    case 1: return shape;
    case 2: return scale;
    case 3: return orientation;
    case 4: return pos_x;
    case 5: return pos_y;
    default: throw std::invalid_argument("factor index out of range");
  }
}

void FactorTuple::validate() const {
  const std::array<int, 6> values{color, shape, scale, orientation, pos_x,
                                  pos_y};
  for (int i = 0; i < 6; ++i)
    if (values[i] < 0 || values[i] >= kCardinalities[i])
      throw std::invalid_argument(std::string("factor out of range: ") +
                                  kNames[i]);
}

// ---- continuous render parameters -------------------------------------------

RenderParams RenderParams::from_factors(const FactorTuple& f) {
  f.validate();
  RenderParams p;
  p.shape = f.shape;
  p.hue = static_cast<double>(f.color) / 10.0;
  p.half_size = 6.0 + 1.6 * static_cast<double>(f.scale);  // 6..14 px
  // quarter-turn traversal keeps every orientation index visually distinct
  // for all three shapes (a full turn would alias the square 4-fold)
  p.angle = static_cast<double>(f.orientation) * (M_PI / 2.0) / 40.0;
  p.cx = 16.0 + 32.0 * static_cast<double>(f.pos_x) / 31.0;
  p.cy = 16.0 + 32.0 * static_cast<double>(f.pos_y) / 31.0;
  return p;
}

// ---- image helpers ----------------------------------------------------------

std::pair<double, double> SpriteImage::centroid() const {
  double wx = 0.0, wy = 0.0, w = 0.0;
  for (int y = 0; y < kSize; ++y)
    for (int x = 0; x < kSize; ++x) {
      const double v = at(y, x, 0) + at(y, x, 1) + at(y, x, 2);
      wx += v * x;
      wy += v * y;
      w += v;
    }
  if (w == 0.0) return {0.0, 0.0};
  return {wx / w, wy / w};
}

int SpriteImage::foreground_count() const {
  int count = 0;
  for (int y = 0; y < kSize; ++y)
    for (int x = 0; x < kSize; ++x)
      if (at(y, x, 0) > 0.0 || at(y, x, 1) > 0.0 || at(y, x, 2) > 0.0) ++count;
  return count;
}

Eigen::VectorXd SpriteImage::features(int stride) const {
  if (stride < 1) throw std::invalid_argument("features: stride >= 1");
  const int side = (kSize + stride - 1) / stride;
  Eigen::VectorXd out(side * side * 3);
  int k = 0;
  for (int y = 0; y < kSize; y += stride)
    for (int x = 0; x < kSize; x += stride)
      for (int c = 0; c < 3; ++c) out[k++] = at(y, x, c);
  return out;
}

// ---- rendering --------------------------------------------------------------

namespace {

void hsv_to_rgb(double h, double& r, double& g, double& b) {
  h = h - std::floor(h);
  const double x = 1.0 - std::abs(std::fmod(h * 6.0, 2.0) - 1.0);
  switch (static_cast<int>(h * 6.0) % 6) {
    case 0: r = 1; g = x; b = 0; break;
    case 1: r = x; g = 1; b = 0; break;
    case 2: r = 0; g = 1; b = x; break;
    case 3: r = 0; g = x; b = 1; break;
    case 4: r = x; g = 0; b = 1; break;
    default: r = 1; g = 0; b = x; break;
  }
}

// local coordinates u, v in units of half_size, v pointing up
bool inside_shape(int shape, double u, double v) {
  switch (shape) {
    case 0:  // square
      return std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
    case 1:  // ellipse, 1 : 0.6 aspect
      return u * u + (v / 0.6) * (v / 0.6) <= 1.0;
    case 2: {  // heart: (x^2 + y^2 - 1)^3 - x^2 y^3 <= 0
      const double x = 1.2 * u;
      const double y = 1.2 * v;
      const double q = x * x + y * y - 1.0;
      return q * q * q - x * x * y * y * y <= 0.0;
    }
    default:
      throw std::invalid_argument("unknown shape index");
  }
}

}  // namespace

SpriteImage render(const RenderParams& p) {
  SpriteImage img;
  double r, g, b;
  hsv_to_rgb(p.hue, r, g, b);
  const double ca = std::cos(p.angle), sa = std::sin(p.angle);
  const double margin = 1.8 * p.half_size;
  const int x0 = std::max(0, static_cast<int>(std::floor(p.cx - margin)));
  const int x1 = std::min(SpriteImage::kSize - 1,
                          static_cast<int>(std::ceil(p.cx + margin)));
  const int y0 = std::max(0, static_cast<int>(std::floor(p.cy - margin)));
  const int y1 = std::min(SpriteImage::kSize - 1,
                          static_cast<int>(std::ceil(p.cy + margin)));
  constexpr double kSub[2] = {0.25, 0.75};
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      int hits = 0;
      for (double oy : kSub)
        for (double ox : kSub) {
          const double dx = (x + ox) - p.cx;
          const double dy = (y + oy) - p.cy;
          // rotate into the sprite frame; image y grows downward
          const double u = (ca * dx - sa * dy) / p.half_size;
          const double v = -(sa * dx + ca * dy) / p.half_size;
          if (inside_shape(p.shape, u, v)) ++hits;
        }
      if (hits > 0) {
        const double cov = hits / 4.0;
        img.at(y, x, 0) = cov * r;
        img.at(y, x, 1) = cov * g;
        img.at(y, x, 2) = cov * b;
      }
    }
  return img;
}

SpriteImage render(const FactorTuple& factors) {
  return render(RenderParams::from_factors(factors));
}

// ---- transforms -------------------------------------------------------------

TransformKind transform_kind_from_string(const std::string& s) {
  if (s == "color-jitter") return TransformKind::kColorJitter;
  if (s == "rotation") return TransformKind::kRotation;
  if (s == "rescale") return TransformKind::kRescale;
  if (s == "translate") return TransformKind::kTranslate;
  throw std::invalid_argument("unknown transform kind: " + s);
}

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::kColorJitter: return "color-jitter";
    case TransformKind::kRotation: return "rotation";
    case TransformKind::kRescale: return "rescale";
    case TransformKind::kTranslate: return "translate";
  }
  throw std::logic_error("bad transform kind");
}

Strength strength_from_string(const std::string& s) {
  if (s == "weak") return Strength::kWeak;
  if (s == "medium") return Strength::kMedium;
  if (s == "strong") return Strength::kStrong;
  throw std::invalid_argument("unknown strength: " + s);
}

std::string to_string(Strength s) {
  switch (s) {
    case Strength::kWeak: return "weak";
    case Strength::kMedium: return "medium";
    case Strength::kStrong: return "strong";
  }
  throw std::logic_error("bad strength");
}

StrengthRanges strength_ranges(Strength s) {
  switch (s) {
    case Strength::kWeak: return {0.1, 20.0 * M_PI / 180.0, 0.10, 2.0};
    case Strength::kMedium: return {0.2, 40.0 * M_PI / 180.0, 0.20, 4.0};
    // full hue circle, half-turn rotations
    case Strength::kStrong: return {0.5, M_PI, 0.40, 8.0};
  }
  throw std::logic_error("bad strength");
}

std::string strength_table_json() {
  nlohmann::json j;
  j["schema"] = "dissl.strengths/1";
  for (Strength s : {Strength::kWeak, Strength::kMedium, Strength::kStrong}) {
    const auto r = strength_ranges(s);
    j[to_string(s)] = {{"hue_shift", r.hue_shift},
                       {"rotation_rad", r.rotation},
                       {"rescale_fraction", r.rescale},
                       {"translate_px", r.translate}};
  }
  return j.dump(2);
}

TransformGroups default_groups_m2() {
  return {{TransformKind::kColorJitter},
          {TransformKind::kRotation, TransformKind::kTranslate}};
}

TransformGroups all_kinds_as_groups() {
  return {{TransformKind::kColorJitter},
          {TransformKind::kRotation},
          {TransformKind::kRescale},
          {TransformKind::kTranslate}};
}

AtomicTransform sample_atomic(TransformKind kind, Strength strength,
                              RngStream& rng) {
  const auto r = strength_ranges(strength);
  AtomicTransform t;
  t.kind = kind;
  t.strength = strength;
  switch (kind) {
    case TransformKind::kColorJitter:
      t.params = {rng.uniform(-r.hue_shift, r.hue_shift)};
      break;
    case TransformKind::kRotation:
      t.params = {rng.uniform(-r.rotation, r.rotation)};
      break;
    case TransformKind::kRescale:
      t.params = {rng.uniform(1.0 - r.rescale, 1.0 + r.rescale)};
      break;
    case TransformKind::kTranslate:
      t.params = {rng.uniform(-r.translate, r.translate),
                  rng.uniform(-r.translate, r.translate)};
      break;
  }
  return t;
}

RenderParams apply_transform(const RenderParams& params,
                             const AtomicTransform& t) {
  RenderParams p = params;
  switch (t.kind) {
    case TransformKind::kColorJitter:
      p.hue = p.hue + t.params.at(0);
      p.hue -= std::floor(p.hue);
      break;
    case TransformKind::kRotation:
      p.angle += t.params.at(0);
      break;
    case TransformKind::kRescale:
      p.half_size = std::clamp(p.half_size * t.params.at(0), 3.0, 18.0);
      break;
    case TransformKind::kTranslate:
      p.cx = std::clamp(p.cx + t.params.at(0), 10.0, 54.0);
      p.cy = std::clamp(p.cy + t.params.at(1), 10.0, 54.0);
      break;
  }
  return p;
}

StructuredViewPair make_structured_pair(const FactorTuple& factors, int mode,
                                        const TransformGroups& groups,
                                        Strength strength, RngStream& rng) {
  const int m_count = static_cast<int>(groups.size());
  if (mode < 0 || mode > m_count)
    throw std::invalid_argument("make_structured_pair: mode out of range");

  StructuredViewPair pair;
  pair.mode = mode;
  RenderParams pa = RenderParams::from_factors(factors);
  RenderParams pb = pa;
  for (int g = 1; g <= m_count; ++g) {
    for (TransformKind kind : groups[g - 1]) {
      const AtomicTransform ta = sample_atomic(kind, strength, rng);
      const AtomicTransform tb =
          (g == mode) ? ta : sample_atomic(kind, strength, rng);
      pair.transforms_a.push_back(ta);
      pair.transforms_b.push_back(tb);
      pa = apply_transform(pa, ta);
      pb = apply_transform(pb, tb);
    }
  }
  pair.view_a = render(pa);
  pair.view_b = render(pb);
  return pair;
}

// ---- dataset ----------------------------------------------------------------

FactorTuple sample_factors(RngStream& rng) {
  FactorTuple f;
  f.color = static_cast<int>(rng.uniform_int(10));
  f.shape = static_cast<int>(rng.uniform_int(3));
  f.scale = static_cast<int>(rng.uniform_int(6));
  f.orientation = static_cast<int>(rng.uniform_int(40));
  f.pos_x = static_cast<int>(rng.uniform_int(32));
  f.pos_y = static_cast<int>(rng.uniform_int(32));
  return f;
}

std::vector<std::pair<FactorTuple, SpriteImage>> build_dataset(int n,
                                                               RngStream& rng) {
  if (n < 1) throw std::invalid_argument("build_dataset: n >= 1 required");
  std::vector<std::pair<FactorTuple, SpriteImage>> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const FactorTuple f = sample_factors(rng);
    out.emplace_back(f, render(f));
  }
  return out;
}

void export_dataset(
    const std::string& dir,
    const std::vector<std::pair<FactorTuple, SpriteImage>>& dataset) {
  fs::create_directories(dir);
  {
    std::ofstream csv(fs::path(dir) / "factors.csv");
    csv << "color,shape,scale,orientation,pos_x,pos_y\n";
    for (const auto& [f, img] : dataset)
      csv << f.color << ',' << f.shape << ',' << f.scale << ','
          << f.orientation << ',' << f.pos_x << ',' << f.pos_y << '\n';
  }
  {
    std::ofstream raw(fs::path(dir) / "images.u8", std::ios::binary);
    std::vector<std::uint8_t> buf;
    for (const auto& [f, img] : dataset) {
      buf.clear();
      buf.reserve(img.pixels.size());
      for (double v : img.pixels)
        buf.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
      raw.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
    }
  }
  {
    std::ofstream js(fs::path(dir) / "strengths.json");
    js << strength_table_json() << '\n';
  }
}

}  // namespace dissl::spriteworld
