#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "polyinr/generator.hpp"

namespace polyinr {

enum class InterpolationSpace { Latent, Affine };

// Either a z vector or a full set of affine parameters.
template <typename T>
using Endpoint = std::variant<std::vector<T>, AffineParams<T>>;

// Latent space lerps z before the mapping network (class held fixed); affine
// space lerps every A_i. t = 0 and t = 1 return the endpoints exactly.
template <typename T>
ImageBuffer<T> interpolate(const BasicGenerator<T>& gen, const Endpoint<T>& a,
                           const Endpoint<T>& b, double t, InterpolationSpace space,
                           const CoordinateGrid& grid,
                           std::optional<std::size_t> class_id = std::nullopt);

template <typename T>
AffineParams<T> lerp_affine(const AffineParams<T>& a, const AffineParams<T>& b, double t);

class LevelSet {
 public:
  LevelSet() = default;
  LevelSet(std::initializer_list<std::size_t> levels) : levels_(levels) {}
  explicit LevelSet(std::set<std::size_t> levels) : levels_(std::move(levels)) {}

  static LevelSet all(std::size_t levels);
  // "5-9", "0,2,4", "1-3,7"; empty text is the empty set.
  static LevelSet parse(const std::string& text);

  bool contains(std::size_t level) const { return levels_.count(level) > 0; }
  bool empty() const noexcept { return levels_.empty(); }
  const std::set<std::size_t>& levels() const noexcept { return levels_; }
  LevelSet complement(std::size_t levels) const;
  // Argument error when any index is >= levels.
  void check(std::size_t levels) const;

 private:
  std::set<std::size_t> levels_;
};

// B's affine parameters with A_i copied in at every level of the set.
template <typename T>
AffineParams<T> mix_affine(const AffineParams<T>& a, const AffineParams<T>& b,
                           const LevelSet& levels);

template <typename T>
ImageBuffer<T> style_mix(const BasicGenerator<T>& gen, const AffineParams<T>& a,
                         const AffineParams<T>& b, const LevelSet& levels,
                         const CoordinateGrid& grid);

// Render on [-margin, 1 + margin]^2.
template <typename T>
ImageBuffer<T> extrapolate(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                           double margin, std::size_t height, std::size_t width);

// Size of an extrapolated axis whose step matches a unit axis of `base`
// samples; nullopt when margin * (base - 1) is not a whole number of steps.
std::optional<std::size_t> aligned_extrapolation_size(std::size_t base, double margin);

enum class UpsampleMode { Nested, Standard };

// Nested: nested_dense_grid, f(H-1)+1 per axis. Standard: make_grid(fH, fW).
template <typename T>
ImageBuffer<T> upsample_render(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                               std::size_t base_height, std::size_t base_width,
                               std::size_t factor, UpsampleMode mode);

struct HeatMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // row-major, in [0, 1]

  double at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
};

// Weights each channel of a (H*W) x n feature matrix by its spatial mean,
// sums over channels and min-max normalizes. A flat map exports as zeros.
template <typename T>
HeatMap heatmap_from_features(const Tensor<T>& features, std::size_t height, std::size_t width);

template <typename T>
HeatMap heatmap(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                const CoordinateGrid& grid, std::size_t level);

// Grey three-channel image in [-1, 1] for PNG export.
ImageBuffer<float> heatmap_image(const HeatMap& map);

}  // namespace polyinr
