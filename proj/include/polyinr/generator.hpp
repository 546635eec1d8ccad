#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyinr/grid.hpp"
#include "polyinr/tape.hpp"
#include "polyinr/tensor.hpp"

namespace polyinr {

struct GeneratorConfig {
  std::size_t z_dim = 64;
  std::size_t w_dim = 512;
  std::size_t levels = 10;
  std::size_t feature_dim = 512;
  std::size_t num_classes = 0;
  // Defaults to w_dim when unset.
  std::optional<std::size_t> class_embed_dim;
  double leaky_slope = 0.2;
  // Synthesis rectifiers become the identity, which makes the output an exact
  // polynomial in (x, y). Only meant for degree checks.
  bool test_identity_activation = false;

  std::size_t embed_dim() const noexcept { return class_embed_dim.value_or(w_dim); }
  std::size_t mapping_input_dim() const noexcept {
    return z_dim + (num_classes > 0 ? embed_dim() : 0);
  }
  void validate() const;
  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

// Exact number of scalars allocated by a generator with this config.
std::uint64_t count_params(const GeneratorConfig& config);

// y = x * weight + bias with weight stored (in x out) and bias (1 x out).
template <typename T>
struct Linear {
  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor;
};

template <typename T>
struct NamedConstTensor {
  std::string name;
  const Tensor<T>* tensor;
};

// Per-level n x 3 matrices; row j holds (a_j, b_j, c_j), the coefficients of
// x, y and the constant term.
template <typename T>
struct AffineParams {
  std::vector<Tensor<T>> levels;

  std::size_t level_count() const noexcept { return levels.size(); }
  std::size_t feature_dim() const noexcept { return levels.empty() ? 0 : levels[0].rows(); }

  // Throws ArgumentError unless shapes are (levels, n, 3) and entries finite.
  void check(std::size_t expected_levels, std::size_t expected_n) const;

  template <typename U>
  AffineParams<U> cast() const {
    AffineParams<U> out;
    for (const auto& t : levels) out.levels.push_back(t.template cast<U>());
    return out;
  }
  friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

template <typename T>
bool bitwise_equal(const AffineParams<T>& a, const AffineParams<T>& b);

// H x W RGB image, nominal range [-1, 1], pixels in grid raster order.
template <typename T>
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(std::size_t height, std::size_t width, T fill = T(0))
      : height_(height), width_(width), pixels_({height * width, 3}, fill) {}
  ImageBuffer(std::size_t height, std::size_t width, Tensor<T> pixels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept { return height_ * width_; }

  T& at(std::size_t row, std::size_t col, std::size_t channel) {
    return pixels_((row * width_ + col), channel);
  }
  T at(std::size_t row, std::size_t col, std::size_t channel) const {
    return pixels_((row * width_ + col), channel);
  }

  // (H*W) x 3
  const Tensor<T>& pixels() const noexcept { return pixels_; }
  Tensor<T>& pixels() noexcept { return pixels_; }

  // Sub-image of every stride-th pixel starting at (row0, col0).
  ImageBuffer strided(std::size_t row0, std::size_t col0, std::size_t stride, std::size_t rows,
                      std::size_t cols) const;

  template <typename U>
  ImageBuffer<U> cast() const {
    return ImageBuffer<U>(height_, width_, pixels_.template cast<U>());
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  Tensor<T> pixels_;
};

template <typename T>
bool bitwise_equal(const ImageBuffer<T>& a, const ImageBuffer<T>& b);

template <typename T>
struct GeneratorWeights {
  Tensor<T> class_embedding;  // num_classes x embed_dim, empty when unconditional
  Linear<T> mapping0;
  Linear<T> mapping1;
  std::vector<Linear<T>> affine_heads;  // w_dim -> 3n
  std::vector<Linear<T>> synthesis;     // n -> n
  Linear<T> rgb_head;                   // n -> 3
};

// Mapping network, per-level affine heads and synthesis network.
template <typename T>
class BasicGenerator {
 public:
  // Allocates zero-filled weights with the shapes the config implies.
  explicit BasicGenerator(GeneratorConfig config);

  const GeneratorConfig& config() const noexcept { return config_; }
  const GeneratorWeights<T>& weights() const noexcept { return weights_; }
  GeneratorWeights<T>& weights() noexcept { return weights_; }

  // Canonical order: class_embedding, mapping.0, mapping.1, then per level
  // affine_head.i and synthesis.i, finally rgb_head. Weight before bias.
  std::vector<NamedTensor<T>> parameters();
  std::vector<NamedConstTensor<T>> parameters() const;
  std::uint64_t parameter_count() const;

  template <typename U>
  BasicGenerator<U> cast() const;

 private:
  GeneratorConfig config_;
  GeneratorWeights<T> weights_;
};

using Generator = BasicGenerator<float>;
using Generator64 = BasicGenerator<double>;

template <typename T>
bool bitwise_equal(const BasicGenerator<T>& a, const BasicGenerator<T>& b);

// Deterministic in (config, seed). Linear weights ~ N(0, 1/sqrt(fan_in)),
// biases zero, except affine heads: weights ~ N(0, 0.01/sqrt(w_dim)) and the
// bias of every c entry ~ N(0, 1).
template <typename T = float>
BasicGenerator<T> init_generator(const GeneratorConfig& config, std::uint64_t seed);

// Standard-normal latent of length z_dim drawn from seed.
template <typename T = float>
std::vector<T> random_latent(const GeneratorConfig& config, std::uint64_t seed);

template <typename T>
std::vector<T> map_latent(const BasicGenerator<T>& gen, std::span<const T> z,
                          std::optional<std::size_t> class_id = std::nullopt);

template <typename T>
AffineParams<T> affine_from_w(const BasicGenerator<T>& gen, std::span<const T> w);

template <typename T>
ImageBuffer<T> synthesize(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                          const CoordinateGrid& grid);

// Renders only the listed grid pixels; the result is pixels.size() x 3.
template <typename T>
Tensor<T> synthesize_pixels(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                            const CoordinateGrid& grid, const std::vector<std::size_t>& pixels);

template <typename T>
ImageBuffer<T> sample(const BasicGenerator<T>& gen, std::span<const T> z,
                      std::optional<std::size_t> class_id, std::size_t height, std::size_t width);

// Feature matrix F_level, (H*W) x n.
template <typename T>
Tensor<T> level_features(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                         const CoordinateGrid& grid, std::size_t level);

// Applies rgb_head to a feature matrix, (P x n) -> (P x 3).
template <typename T>
Tensor<T> apply_rgb_head(const BasicGenerator<T>& gen, const Tensor<T>& features);

// Tape-level building blocks shared by rendering, training and inversion.
namespace trace {

template <typename T>
struct GeneratorVars {
  Var class_embedding;
  Var mapping0_w, mapping0_b, mapping1_w, mapping1_b;
  std::vector<Var> head_w, head_b;
  std::vector<Var> syn_w, syn_b;
  Var rgb_w, rgb_b;

  // Every parameter Var in canonical order.
  std::vector<Var> all() const;
};

// Registers every generator tensor as a by-reference leaf.
template <typename T>
GeneratorVars<T> bind(Tape<T>& tape, const BasicGenerator<T>& gen, bool requires_grad);

// z is 1 x z_dim; returns w as 1 x w_dim.
template <typename T>
Var map_latent(Tape<T>& tape, const BasicGenerator<T>& gen, const GeneratorVars<T>& vars, Var z,
               std::optional<std::size_t> class_id);

// Returns one n x 3 Var per level.
template <typename T>
std::vector<Var> affine_from_w(Tape<T>& tape, const BasicGenerator<T>& gen,
                               const GeneratorVars<T>& vars, Var w);

// coords is P x 3 with rows (x, y, 1). Returns F_last_level (P x n).
template <typename T>
Var features(Tape<T>& tape, const BasicGenerator<T>& gen, const GeneratorVars<T>& vars,
             std::span<const Var> affine, Var coords, std::size_t last_level);

// Full synthesis: P x 3 RGB.
template <typename T>
Var synthesize(Tape<T>& tape, const BasicGenerator<T>& gen, const GeneratorVars<T>& vars,
               std::span<const Var> affine, Var coords);

}  // namespace trace

}  // namespace polyinr
