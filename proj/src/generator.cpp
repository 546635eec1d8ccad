#include "polyinr/generator.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "polyinr/parallel.hpp"

namespace polyinr {

namespace {

// Pixels per tape when rendering without gradients.
constexpr std::size_t kRenderChunk = 1024;

template <typename T>
Linear<T> zero_linear(std::size_t in, std::size_t out) {
  return {Tensor<T>({in, out}), Tensor<T>({1, out})};
}

}  // namespace

void GeneratorConfig::validate() const {
  if (levels < 1) throw ArgumentError("generator config: levels must be >= 1");
  if (z_dim < 1 || w_dim < 1 || feature_dim < 1) {
    throw ArgumentError("generator config: z_dim, w_dim and feature_dim must be >= 1");
  }
  if (class_embed_dim && *class_embed_dim < 1) {
    throw ArgumentError("generator config: class_embed_dim must be >= 1");
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    throw ArgumentError("generator config: leaky_slope must lie in (0, 1)");
  }
}

std::uint64_t count_params(const GeneratorConfig& c) {
  c.validate();
  const std::uint64_t n = c.feature_dim;
  const std::uint64_t w = c.w_dim;
  std::uint64_t total = 0;
  if (c.num_classes > 0) total += std::uint64_t{c.num_classes} * c.embed_dim();
  total += std::uint64_t{c.mapping_input_dim()} * w + w;  // mapping.0
  total += w * w + w;                                     // mapping.1
  total += c.levels * (w * 3 * n + 3 * n);                // affine heads
  total += c.levels * (n * n + n);                        // synthesis
  total += n * 3 + 3;                                     // rgb head
  return total;
}

template <typename T>
void AffineParams<T>::check(std::size_t expected_levels, std::size_t expected_n) const {
  if (levels.size() != expected_levels) {
    throw ArgumentError("affine parameters have " + std::to_string(levels.size()) +
                        " levels, generator has " + std::to_string(expected_levels));
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i].shape() != Shape{expected_n, 3}) {
      throw ArgumentError("affine level " + std::to_string(i) + " has shape " +
                          shape_to_string(levels[i].shape()) + ", expected [" +
                          std::to_string(expected_n) + "x3]");
    }
    if (!levels[i].all_finite()) {
      throw ArgumentError("affine level " + std::to_string(i) + " has non-finite entries");
    }
  }
}

template <typename T>
bool bitwise_equal(const AffineParams<T>& a, const AffineParams<T>& b) {
  if (a.levels.size() != b.levels.size()) return false;
  for (std::size_t i = 0; i < a.levels.size(); ++i) {
    if (!bitwise_equal(a.levels[i], b.levels[i])) return false;
  }
  return true;
}

template <typename T>
ImageBuffer<T>::ImageBuffer(std::size_t height, std::size_t width, Tensor<T> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (pixels_.shape() != Shape{height * width, 3}) {
    throw DimensionError("image " + std::to_string(height) + "x" + std::to_string(width) +
                         " needs pixels [" + std::to_string(height * width) + "x3], got " +
                         shape_to_string(pixels_.shape()));
  }
}

template <typename T>
ImageBuffer<T> ImageBuffer<T>::strided(std::size_t row0, std::size_t col0, std::size_t stride,
                                       std::size_t rows, std::size_t cols) const {
  if (stride == 0 || row0 + (rows - 1) * stride >= height_ ||
      col0 + (cols - 1) * stride >= width_) {
    throw ArgumentError("strided view exceeds image bounds");
  }
  ImageBuffer out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t ch = 0; ch < 3; ++ch) {
        out.at(r, c, ch) = at(row0 + r * stride, col0 + c * stride, ch);
      }
    }
  }
  return out;
}

template <typename T>
bool bitwise_equal(const ImageBuffer<T>& a, const ImageBuffer<T>& b) {
  return a.height() == b.height() && a.width() == b.width() &&
         bitwise_equal(a.pixels(), b.pixels());
}

template <typename T>
BasicGenerator<T>::BasicGenerator(GeneratorConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t n = config_.feature_dim;
  const std::size_t w = config_.w_dim;
  if (config_.num_classes > 0) {
    weights_.class_embedding = Tensor<T>({config_.num_classes, config_.embed_dim()});
  }
  weights_.mapping0 = zero_linear<T>(config_.mapping_input_dim(), w);
  weights_.mapping1 = zero_linear<T>(w, w);
  for (std::size_t i = 0; i < config_.levels; ++i) {
    weights_.affine_heads.push_back(zero_linear<T>(w, 3 * n));
    weights_.synthesis.push_back(zero_linear<T>(n, n));
  }
  weights_.rgb_head = zero_linear<T>(n, 3);
}

template <typename T>
std::vector<NamedTensor<T>> BasicGenerator<T>::parameters() {
  std::vector<NamedTensor<T>> out;
  auto& w = weights_;
  if (!w.class_embedding.empty()) out.push_back({"class_embedding", &w.class_embedding});
  auto add = [&](const std::string& name, Linear<T>& l) {
    out.push_back({name + ".weight", &l.weight});
    out.push_back({name + ".bias", &l.bias});
  };
  add("mapping.0", w.mapping0);
  add("mapping.1", w.mapping1);
  for (std::size_t i = 0; i < config_.levels; ++i) {
    add("affine_head." + std::to_string(i), w.affine_heads[i]);
    add("synthesis." + std::to_string(i), w.synthesis[i]);
  }
  add("rgb_head", w.rgb_head);
  return out;
}

template <typename T>
std::vector<NamedConstTensor<T>> BasicGenerator<T>::parameters() const {
  std::vector<NamedConstTensor<T>> out;
  for (const auto& p : const_cast<BasicGenerator*>(this)->parameters()) {
    out.push_back({p.name, p.tensor});
  }
  return out;
}

template <typename T>
std::uint64_t BasicGenerator<T>::parameter_count() const {
  std::uint64_t total = 0;
  for (const auto& p : parameters()) total += p.tensor->size();
  return total;
}

template <typename T>
template <typename U>
BasicGenerator<U> BasicGenerator<T>::cast() const {
  BasicGenerator<U> out(config_);
  auto dst = out.parameters();
  auto src = parameters();
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i].tensor = src[i].tensor->template cast<U>();
  return out;
}

template <typename T>
bool bitwise_equal(const BasicGenerator<T>& a, const BasicGenerator<T>& b) {
  if (!(a.config() == b.config())) return false;
  auto pa = a.parameters();
  auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].name != pb[i].name || !bitwise_equal(*pa[i].tensor, *pb[i].tensor)) return false;
  }
  return true;
}

template <typename T>
BasicGenerator<T> init_generator(const GeneratorConfig& config, std::uint64_t seed) {
  BasicGenerator<T> gen(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](Tensor<T>& t, double stddev) {
    for (T& v : t.data()) v = static_cast<T>(normal(rng) * stddev);
  };
  auto& w = gen.weights();
  const double w_dim = static_cast<double>(config.w_dim);
  if (!w.class_embedding.empty()) fill(w.class_embedding, 1.0);
  fill(w.mapping0.weight, 1.0 / std::sqrt(static_cast<double>(config.mapping_input_dim())));
  fill(w.mapping1.weight, 1.0 / std::sqrt(w_dim));
  const double feat = static_cast<double>(config.feature_dim);
  for (std::size_t i = 0; i < config.levels; ++i) {
    auto& head = w.affine_heads[i];
    fill(head.weight, 0.01 / std::sqrt(w_dim));
    // Bias laid out as n rows of (a, b, c); only c starts non-zero.
    for (std::size_t j = 0; j < config.feature_dim; ++j) {
      head.bias[3 * j + 2] = static_cast<T>(normal(rng));
    }
    fill(w.synthesis[i].weight, 1.0 / std::sqrt(feat));
  }
  fill(w.rgb_head.weight, 1.0 / std::sqrt(feat));
  return gen;
}

template <typename T>
std::vector<T> random_latent(const GeneratorConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<T> z(config.z_dim);
  for (T& v : z) v = static_cast<T>(normal(rng));
  return z;
}

namespace trace {

template <typename T>
std::vector<Var> GeneratorVars<T>::all() const {
  std::vector<Var> out;
  if (class_embedding.valid()) out.push_back(class_embedding);
  out.insert(out.end(), {mapping0_w, mapping0_b, mapping1_w, mapping1_b});
  for (std::size_t i = 0; i < head_w.size(); ++i) {
    out.insert(out.end(), {head_w[i], head_b[i], syn_w[i], syn_b[i]});
  }
  out.insert(out.end(), {rgb_w, rgb_b});
  return out;
}

template <typename T>
GeneratorVars<T> bind(Tape<T>& tape, const BasicGenerator<T>& gen, bool requires_grad) {
  GeneratorVars<T> v;
  const auto& w = gen.weights();
  if (!w.class_embedding.empty()) {
    v.class_embedding = tape.leaf_ref(w.class_embedding, requires_grad, "class_embedding");
  }
  v.mapping0_w = tape.leaf_ref(w.mapping0.weight, requires_grad, "mapping.0.weight");
  v.mapping0_b = tape.leaf_ref(w.mapping0.bias, requires_grad, "mapping.0.bias");
  v.mapping1_w = tape.leaf_ref(w.mapping1.weight, requires_grad, "mapping.1.weight");
  v.mapping1_b = tape.leaf_ref(w.mapping1.bias, requires_grad, "mapping.1.bias");
  for (std::size_t i = 0; i < gen.config().levels; ++i) {
    const std::string s = std::to_string(i);
    v.head_w.push_back(tape.leaf_ref(w.affine_heads[i].weight, requires_grad, "affine_head." + s));
    v.head_b.push_back(tape.leaf_ref(w.affine_heads[i].bias, requires_grad, "affine_head." + s));
    v.syn_w.push_back(tape.leaf_ref(w.synthesis[i].weight, requires_grad, "synthesis." + s));
    v.syn_b.push_back(tape.leaf_ref(w.synthesis[i].bias, requires_grad, "synthesis." + s));
  }
  v.rgb_w = tape.leaf_ref(w.rgb_head.weight, requires_grad, "rgb_head.weight");
  v.rgb_b = tape.leaf_ref(w.rgb_head.bias, requires_grad, "rgb_head.bias");
  return v;
}

template <typename T>
Var map_latent(Tape<T>& tape, const BasicGenerator<T>& gen, const GeneratorVars<T>& vars, Var z,
               std::optional<std::size_t> class_id) {
  const auto& cfg = gen.config();
  const T slope = static_cast<T>(cfg.leaky_slope);
  Var h;
  if (cfg.num_classes > 0) {
    // concat(z, e) * W0 computed as z * W0[:z_dim] + e * W0[z_dim:].
    std::vector<std::size_t> z_rows(cfg.z_dim);
    std::iota(z_rows.begin(), z_rows.end(), std::size_t{0});
    std::vector<std::size_t> e_rows(cfg.embed_dim());
    std::iota(e_rows.begin(), e_rows.end(), cfg.z_dim);
    const Var embed = tape.gather_rows(vars.class_embedding, {*class_id});
    const Var wz = tape.gather_rows(vars.mapping0_w, std::move(z_rows));
    const Var we = tape.gather_rows(vars.mapping0_w, std::move(e_rows));
    h = tape.add(tape.matmul(z, wz), tape.matmul(embed, we));
  } else {
    h = tape.matmul(z, vars.mapping0_w);
  }
  h = tape.leaky_relu(tape.add_row(h, vars.mapping0_b), slope);
  return tape.add_row(tape.matmul(h, vars.mapping1_w), vars.mapping1_b);
}

template <typename T>
std::vector<Var> affine_from_w(Tape<T>& tape, const BasicGenerator<T>& gen,
                               const GeneratorVars<T>& vars, Var w) {
  const std::size_t n = gen.config().feature_dim;
  std::vector<Var> out;
  for (std::size_t i = 0; i < gen.config().levels; ++i) {
    const Var flat = tape.add_row(tape.matmul(w, vars.head_w[i]), vars.head_b[i]);
    out.push_back(tape.reshape(flat, {n, 3}));
  }
  return out;
}

template <typename T>
Var features(Tape<T>& tape, const BasicGenerator<T>& gen, const GeneratorVars<T>& vars,
             std::span<const Var> affine, Var coords, std::size_t last_level) {
  const auto& cfg = gen.config();
  const T slope = static_cast<T>(cfg.leaky_slope);
  auto activate = [&](Var x) {
    return cfg.test_identity_activation ? x : tape.leaky_relu(x, slope);
  };
  Var f;
  for (std::size_t i = 0; i <= last_level; ++i) {
    // (A_i X)^T: one row of n affine-transformed coordinates per pixel.
    Var h = tape.matmul_nt(coords, affine[i]);
    if (i > 0) h = tape.mul(h, f);
    f = activate(tape.add_row(tape.matmul(h, vars.syn_w[i]), vars.syn_b[i]));
  }
  return f;
}

template <typename T>
Var synthesize(Tape<T>& tape, const BasicGenerator<T>& gen, const GeneratorVars<T>& vars,
               std::span<const Var> affine, Var coords) {
  const Var f = features(tape, gen, vars, affine, coords, gen.config().levels - 1);
  return tape.add_row(tape.matmul(f, vars.rgb_w), vars.rgb_b);
}

}  // namespace trace

namespace {

template <typename T>
void check_latent(const GeneratorConfig& cfg, std::size_t z_len,
                  std::optional<std::size_t> class_id) {
  if (z_len != cfg.z_dim) {
    throw ArgumentError("latent has length " + std::to_string(z_len) + ", expected " +
                        std::to_string(cfg.z_dim));
  }
  if (cfg.num_classes > 0) {
    if (!class_id) throw ArgumentError("conditional generator needs a class id");
    if (*class_id >= cfg.num_classes) {
      throw ArgumentError("class id " + std::to_string(*class_id) + " out of range [0, " +
                          std::to_string(cfg.num_classes) + ")");
    }
  } else if (class_id) {
    throw ArgumentError("unconditional generator does not take a class id");
  }
}

// Evaluates `body` over chunks of pixel rows and stitches the results.
template <typename T, typename Body>
Tensor<T> render_chunked(const Tensor<T>& coords, std::size_t out_cols, Body body) {
  const std::size_t total = coords.rows();
  Tensor<T> out({total, out_cols});
  const std::size_t chunks = (total + kRenderChunk - 1) / kRenderChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kRenderChunk;
    const std::size_t count = std::min(kRenderChunk, total - begin);
    Tensor<T> part({count, 3});
    std::copy_n(coords.data().begin() + begin * 3, count * 3, part.data().begin());
    const Tensor<T> result = body(std::move(part));
    std::copy(result.data().begin(), result.data().end(),
              out.data().begin() + begin * out_cols);
  });
  return out;
}

template <typename T>
Tensor<T> run_features(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                       const Tensor<T>& coords, std::optional<std::size_t> last_level) {
  const auto& cfg = gen.config();
  affine.check(cfg.levels, cfg.feature_dim);
  const std::size_t cols = last_level ? cfg.feature_dim : 3;
  return render_chunked<T>(coords, cols, [&](Tensor<T> part) {
    Tape<T> tape;
    const auto vars = trace::bind(tape, gen, false);
    std::vector<Var> a;
    for (const auto& t : affine.levels) a.push_back(tape.leaf_ref(t, false, "affine"));
    const Var x = tape.input(std::move(part), false, "coords");
    const Var out = last_level ? trace::features(tape, gen, vars, a, x, *last_level)
                               : trace::synthesize(tape, gen, vars, a, x);
    return tape.value(out);
  });
}

}  // namespace

template <typename T>
std::vector<T> map_latent(const BasicGenerator<T>& gen, std::span<const T> z,
                          std::optional<std::size_t> class_id) {
  check_latent<T>(gen.config(), z.size(), class_id);
  Tape<T> tape;
  const auto vars = trace::bind(tape, gen, false);
  const Var zv = tape.input(Tensor<T>({1, z.size()}, std::vector<T>(z.begin(), z.end())));
  const Var w = trace::map_latent(tape, gen, vars, zv, class_id);
  return tape.value(w).storage();
}

template <typename T>
AffineParams<T> affine_from_w(const BasicGenerator<T>& gen, std::span<const T> w) {
  if (w.size() != gen.config().w_dim) {
    throw ArgumentError("w has length " + std::to_string(w.size()) + ", expected " +
                        std::to_string(gen.config().w_dim));
  }
  Tape<T> tape;
  const auto vars = trace::bind(tape, gen, false);
  const Var wv = tape.input(Tensor<T>({1, w.size()}, std::vector<T>(w.begin(), w.end())));
  AffineParams<T> out;
  for (Var a : trace::affine_from_w(tape, gen, vars, wv)) out.levels.push_back(tape.value(a));
  return out;
}

template <typename T>
ImageBuffer<T> synthesize(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                          const CoordinateGrid& grid) {
  Tensor<T> rgb = run_features(gen, affine, grid.pixel_rows<T>(), std::nullopt);
  return ImageBuffer<T>(grid.height(), grid.width(), std::move(rgb));
}

template <typename T>
Tensor<T> synthesize_pixels(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                            const CoordinateGrid& grid, const std::vector<std::size_t>& pixels) {
  return run_features(gen, affine, grid.pixel_rows<T>(pixels), std::nullopt);
}

template <typename T>
ImageBuffer<T> sample(const BasicGenerator<T>& gen, std::span<const T> z,
                      std::optional<std::size_t> class_id, std::size_t height, std::size_t width) {
  const auto w = map_latent(gen, z, class_id);
  return synthesize(gen, affine_from_w<T>(gen, w), make_grid(height, width));
}

template <typename T>
Tensor<T> level_features(const BasicGenerator<T>& gen, const AffineParams<T>& affine,
                         const CoordinateGrid& grid, std::size_t level) {
  if (level >= gen.config().levels) {
    throw ArgumentError("level " + std::to_string(level) + " out of range [0, " +
                        std::to_string(gen.config().levels) + ")");
  }
  return run_features(gen, affine, grid.pixel_rows<T>(), level);
}

template <typename T>
Tensor<T> apply_rgb_head(const BasicGenerator<T>& gen, const Tensor<T>& features) {
  Tape<T> tape;
  const auto& head = gen.weights().rgb_head;
  const Var f = tape.leaf_ref(features, false, "features");
  const Var w = tape.leaf_ref(head.weight, false, "rgb_head.weight");
  const Var b = tape.leaf_ref(head.bias, false, "rgb_head.bias");
  return tape.value(tape.add_row(tape.matmul(f, w), b));
}

#define POLYINR_INSTANTIATE(T)                                                                   \
  template struct AffineParams<T>;                                                               \
  template class ImageBuffer<T>;                                                                 \
  template class BasicGenerator<T>;                                                              \
  template bool bitwise_equal(const AffineParams<T>&, const AffineParams<T>&);                   \
  template bool bitwise_equal(const ImageBuffer<T>&, const ImageBuffer<T>&);                     \
  template bool bitwise_equal(const BasicGenerator<T>&, const BasicGenerator<T>&);               \
  template BasicGenerator<T> init_generator<T>(const GeneratorConfig&, std::uint64_t);           \
  template std::vector<T> random_latent<T>(const GeneratorConfig&, std::uint64_t);               \
  template std::vector<T> map_latent(const BasicGenerator<T>&, std::span<const T>,               \
                                     std::optional<std::size_t>);                                \
  template AffineParams<T> affine_from_w(const BasicGenerator<T>&, std::span<const T>);          \
  template ImageBuffer<T> synthesize(const BasicGenerator<T>&, const AffineParams<T>&,           \
                                     const CoordinateGrid&);                                     \
  template Tensor<T> synthesize_pixels(const BasicGenerator<T>&, const AffineParams<T>&,         \
                                       const CoordinateGrid&, const std::vector<std::size_t>&);  \
  template ImageBuffer<T> sample(const BasicGenerator<T>&, std::span<const T>,                   \
                                 std::optional<std::size_t>, std::size_t, std::size_t);          \
  template Tensor<T> level_features(const BasicGenerator<T>&, const AffineParams<T>&,            \
                                    const CoordinateGrid&, std::size_t);                         \
  template Tensor<T> apply_rgb_head(const BasicGenerator<T>&, const Tensor<T>&);                 \
  template struct trace::GeneratorVars<T>;                                                       \
  template trace::GeneratorVars<T> trace::bind(Tape<T>&, const BasicGenerator<T>&, bool);        \
  template Var trace::map_latent(Tape<T>&, const BasicGenerator<T>&,                             \
                                 const trace::GeneratorVars<T>&, Var, std::optional<std::size_t>); \
  template std::vector<Var> trace::affine_from_w(Tape<T>&, const BasicGenerator<T>&,             \
                                                 const trace::GeneratorVars<T>&, Var);           \
  template Var trace::features(Tape<T>&, const BasicGenerator<T>&,                               \
                               const trace::GeneratorVars<T>&, std::span<const Var>, Var,        \
                               std::size_t);                                                     \
  template Var trace::synthesize(Tape<T>&, const BasicGenerator<T>&,                             \
                                 const trace::GeneratorVars<T>&, std::span<const Var>, Var);

POLYINR_INSTANTIATE(float)
POLYINR_INSTANTIATE(double)
#undef POLYINR_INSTANTIATE

template BasicGenerator<double> BasicGenerator<float>::cast<double>() const;
template BasicGenerator<float> BasicGenerator<double>::cast<float>() const;
template BasicGenerator<float> BasicGenerator<float>::cast<float>() const;
template BasicGenerator<double> BasicGenerator<double>::cast<double>() const;

}  // namespace polyinr
