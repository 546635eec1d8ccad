#include "polyinr/manipulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace polyinr {

namespace {

void check_t(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ArgumentError("interpolation t must lie in [0, 1], got " + std::to_string(t));
  }
}

template <typename T>
void check_affine(const BasicGenerator<T>& gen, const AffineParams<T>& a, const char* what) {
  try {
    a.check(gen.config().levels, gen.config().feature_dim);
  } catch (const ArgumentError& e) {
    throw ArgumentError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

template <typename T>
AffineParams<T> lerp_affine(const AffineParams<T>& a, const AffineParams<T>& b, double t) {
  check_t(t);
  if (a.levels.size() != b.levels.size()) {
    throw ArgumentError("interpolation endpoints have different level counts");
  }
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  AffineParams<T> out = a;
  const T s = static_cast<T>(t);
  const T r = static_cast<T>(1.0 - t);
  for (std::size_t i = 0; i < a.levels.size(); ++i) {
    if (a.levels[i].shape() != b.levels[i].shape()) {
      throw ArgumentError("interpolation endpoints differ in shape at level " + std::to_string(i));
    }
    for (std::size_t k = 0; k < a.levels[i].size(); ++k) {
      out.levels[i][k] = r * a.levels[i][k] + s * b.levels[i][k];
    }
  }
  return out;
}

template <typename T>
ImageBuffer<T> interpolate(const BasicGenerator<T>& gen, const Endpoint<T>& a,
                           const Endpoint<T>& b, double t, InterpolationSpace space,
                           const CoordinateGrid& grid, std::optional<std::size_t> class_id) {
  check_t(t);
  if (a.index() != b.index()) throw ArgumentError("interpolation endpoints mix latent and affine");
  const bool latent = std::holds_alternative<std::vector<T>>(a);
  if (latent != (space == InterpolationSpace::Latent)) {
    throw ArgumentError(std::string("interpolation in ") + (latent ? "affine" : "latent") +
                        " space needs " + (latent ? "affine" : "latent") + " endpoints");
  }
  if (!latent) {
    const auto& aa = std::get<AffineParams<T>>(a);
    const auto& ab = std::get<AffineParams<T>>(b);
    check_affine(gen, aa, "endpoint A");
    check_affine(gen, ab, "endpoint B");
    return synthesize(gen, lerp_affine(aa, ab, t), grid);
  }
  const auto& za = std::get<std::vector<T>>(a);
  const auto& zb = std::get<std::vector<T>>(b);
  if (za.size() != gen.config().z_dim || zb.size() != gen.config().z_dim) {
    throw ArgumentError("latent endpoints must have " + std::to_string(gen.config().z_dim) +
                        " entries");
  }
  std::vector<T> z;
  if (t == 0.0) {
    z = za;
  } else if (t == 1.0) {
    z = zb;
  } else {
    z.resize(za.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
      z[k] = static_cast<T>(1.0 - t) * za[k] + static_cast<T>(t) * zb[k];
    }
  }
  const auto w = map_latent<T>(gen, z, class_id);
  return synthesize(gen, affine_from_w<T>(gen, w), grid);
}

LevelSet LevelSet::all(std::size_t levels) {
  std::set<std::size_t> s;
  for (std::size_t i = 0; i < levels; ++i) s.insert(i);
  return LevelSet(std::move(s));
}

LevelSet LevelSet::parse(const std::string& text) {
  std::set<std::size_t> s;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    std::size_t lo = 0, hi = 0;
    if (!(is >> lo)) throw ArgumentError("bad level list '" + text + "'");
    hi = lo;
    char dash = 0;
    if (is >> dash) {
      if (dash != '-' || !(is >> hi) || hi < lo) {
        throw ArgumentError("bad level range '" + item + "'");
      }
    }
    if (!(is >> std::ws).eof()) throw ArgumentError("bad level list '" + text + "'");
    for (std::size_t i = lo; i <= hi; ++i) s.insert(i);
  }
  return LevelSet(std::move(s));
}

LevelSet LevelSet::complement(std::size_t levels) const {
  std::set<std::size_t> s;
  for (std::size_t i = 0; i < levels; ++i) {
    if (!contains(i)) s.insert(i);
  }
  return LevelSet(std::move(s));
}

void LevelSet::check(std::size_t levels) const {
  if (!levels_.empty() && *levels_.rbegin() >= levels) {
    throw ArgumentError("level " + std::to_string(*levels_.rbegin()) + " out of range [0, " +
                        std::to_string(levels) + ")");
  }
}

template <typename T>
AffineParams<T> mix_affine(const AffineParams<T>& a, const AffineParams<T>& b,
                           const LevelSet& levels) {
  if (a.levels.size() != b.levels.size()) {
    throw ArgumentError("style mix sources have different level counts");
  }
  levels.check(b.levels.size());
  AffineParams<T> out = b;
  for (std::size_t i : levels.levels()) out.levels[i] = a.levels[i];
  return out;
}

template <typename T>
ImageBuffer<T> style_mix(const BasicGenerator<T>& gen, const AffineParams<T>& a,
                         const AffineParams<T>& b, const LevelSet& levels,
                         const CoordinateGrid& grid) {
  check_affine(gen, a, "source A");
  check_affine(gen, b, "source B");
  return synthesize(gen, mix_affine(a, b, levels), grid);
}

template <typename T>
ImageBuffer<T> extrapolate(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                           double margin, std::size_t height, std::size_t width) {
  if (!(margin >= 0.0) || !std::isfinite(margin)) {
    throw ArgumentError("extrapolation margin must be finite and >= 0");
  }
  return synthesize(gen, affine, make_grid(height, width, Region::expanded(margin)));
}

std::optional<std::size_t> aligned_extrapolation_size(std::size_t base, double margin) {
  if (base < 2 || !(margin >= 0.0)) return std::nullopt;
  const double steps = margin * static_cast<double>(base - 1);
  const double k = std::round(steps);
  if (std::abs(steps - k) > 1e-9) return std::nullopt;
  return base + 2 * static_cast<std::size_t>(k);
}

template <typename T>
ImageBuffer<T> upsample_render(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                               std::size_t base_height, std::size_t base_width,
                               std::size_t factor, UpsampleMode mode) {
  if (factor < 1) throw ArgumentError("upsample factor must be >= 1");
  if (mode == UpsampleMode::Nested) {
    return synthesize(gen, affine, nested_dense_grid(base_height, base_width, factor));
  }
  return synthesize(gen, affine, make_grid(factor * base_height, factor * base_width));
}

template <typename T>
HeatMap heatmap_from_features(const Tensor<T>& features, std::size_t height, std::size_t width) {
  if (features.rows() != height * width || features.cols() == 0) {
    throw ArgumentError("heatmap: feature matrix " + shape_to_string(features.shape()) +
                        " does not match a " + std::to_string(height) + "x" +
                        std::to_string(width) + " grid");
  }
  const std::size_t p_count = features.rows();
  const std::size_t n = features.cols();
  std::vector<double> weight(n, 0.0);
  for (std::size_t p = 0; p < p_count; ++p) {
    for (std::size_t c = 0; c < n; ++c) weight[c] += features(p, c);
  }
  for (double& w : weight) w /= static_cast<double>(p_count);

  HeatMap map{height, width, std::vector<double>(p_count, 0.0)};
  for (std::size_t p = 0; p < p_count; ++p) {
    double acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) acc += weight[c] * features(p, c);
    map.values[p] = acc;
  }
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  const double mn = *lo, mx = *hi;
  if (!(mx > mn)) {
    std::fill(map.values.begin(), map.values.end(), 0.0);
    return map;
  }
  for (double& v : map.values) v = (v - mn) / (mx - mn);
  return map;
}

template <typename T>
HeatMap heatmap(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                const CoordinateGrid& grid, std::size_t level) {
  return heatmap_from_features(level_features(gen, affine, grid, level), grid.height(),
                               grid.width());
}

ImageBuffer<float> heatmap_image(const HeatMap& map) {
  ImageBuffer<float> img(map.height, map.width);
  for (std::size_t p = 0; p < map.values.size(); ++p) {
    const float v = static_cast<float>(2.0 * map.values[p] - 1.0);
    for (std::size_t ch = 0; ch < 3; ++ch) img.pixels()(p, ch) = v;
  }
  return img;
}

#define POLYINR_INSTANTIATE(T)                                                                    \
  template AffineParams<T> lerp_affine(const AffineParams<T>&, const AffineParams<T>&, double);  \
  template ImageBuffer<T> interpolate(const BasicGenerator<T>&, const Endpoint<T>&,              \
                                      const Endpoint<T>&, double, InterpolationSpace,            \
                                      const CoordinateGrid&, std::optional<std::size_t>);        \
  template AffineParams<T> mix_affine(const AffineParams<T>&, const AffineParams<T>&,            \
                                      const LevelSet&);                                          \
  template ImageBuffer<T> style_mix(const BasicGenerator<T>&, const AffineParams<T>&,            \
                                    const AffineParams<T>&, const LevelSet&,                     \
                                    const CoordinateGrid&);                                      \
  template ImageBuffer<T> extrapolate(const BasicGenerator<T>&, const AffineParams<T>&, double,  \
                                      std::size_t, std::size_t);                                 \
  template ImageBuffer<T> upsample_render(const BasicGenerator<T>&, const AffineParams<T>&,      \
                                          std::size_t, std::size_t, std::size_t, UpsampleMode);  \
  template HeatMap heatmap_from_features(const Tensor<T>&, std::size_t, std::size_t);            \
  template HeatMap heatmap(const BasicGenerator<T>&, const AffineParams<T>&,                     \
                           const CoordinateGrid&, std::size_t);

POLYINR_INSTANTIATE(float)
POLYINR_INSTANTIATE(double)

#undef POLYINR_INSTANTIATE

}  // namespace polyinr
