#include "polyinr/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace polyinr {

template <typename T>
void AdamState<T>::update(std::span<Tensor<T>* const> params, std::span<const Tensor<T>> grads,
                          std::span<const std::string> names) {
  if (params.size() != grads.size()) {
    throw ArgumentError("adam: " + std::to_string(params.size()) + " parameters but " +
                        std::to_string(grads.size()) + " gradients");
  }
  auto label = [&](std::size_t i) {
    return i < names.size() ? names[i] : "parameter " + std::to_string(i);
  };
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].shape() != params[i]->shape()) {
      throw DimensionError("adam: gradient shape " + shape_to_string(grads[i].shape()) +
                           " does not match " + label(i) + " " +
                           shape_to_string(params[i]->shape()));
    }
    if (!grads[i].all_finite()) throw TrainingError("adam: non-finite gradient for " + label(i));
  }
  if (m_.empty()) {
    for (auto* p : params) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  } else if (m_.size() != params.size()) {
    throw ArgumentError("adam: parameter list changed between updates");
  }

  ++step_;
  const double b1 = hyper_.beta1;
  const double b2 = hyper_.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (m_[i].shape() != params[i]->shape()) {
      throw DimensionError("adam: moment buffer shape changed for " + label(i));
    }
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k];
      const double mk = b1 * m[k] + (1.0 - b1) * gk;
      const double vk = b2 * v[k] + (1.0 - b2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double step = hyper_.lr * (mk / corr1) / (std::sqrt(vk / corr2) + hyper_.eps);
      p[k] = static_cast<T>(p[k] - step);
    }
  }
}

template class AdamState<float>;
template class AdamState<double>;

namespace {

void check_loss(double loss, const std::string& where) {
  if (!std::isfinite(loss)) throw TrainingError("non-finite loss " + where);
}

template <typename T>
std::vector<Tensor<T>> collect_grads(const Tape<T>& tape, const std::vector<Var>& vars) {
  std::vector<Tensor<T>> out;
  out.reserve(vars.size());
  for (Var v : vars) out.push_back(tape.grad(v));
  return out;
}

std::vector<std::string> names_of(const Generator& gen) {
  std::vector<std::string> out;
  for (const auto& p : gen.parameters()) out.push_back(p.name);
  return out;
}

std::vector<Tensor<float>*> tensors_of(Generator& gen) {
  std::vector<Tensor<float>*> out;
  for (const auto& p : gen.parameters()) out.push_back(p.tensor);
  return out;
}

}  // namespace

FitResult fit_single_image(const GeneratorConfig& config, const ImageBuffer<float>& target,
                           std::size_t steps, double lr, std::uint64_t seed) {
  if (steps < 1) throw ArgumentError("fit: steps must be >= 1");
  if (target.height() < 2 || target.width() < 2) {
    throw ArgumentError("fit: target must be at least 2x2");
  }
  if (!(lr > 0.0)) throw ArgumentError("fit: learning rate must be positive");
  if (config.num_classes > 0) throw ArgumentError("fit: use an unconditional generator config");

  FitResult result{init_generator<float>(config, seed), {}, {}};
  Generator& gen = result.generator;
  const auto z = random_latent<float>(config, seed ^ 0x9e3779b97f4a7c15ull);
  const auto coords = make_grid(target.height(), target.width()).pixel_rows<float>();
  const auto names = names_of(gen);
  AdamState<float> adam(AdamHyper{lr, 0.0, 0.99, 1e-8});

  for (std::size_t step = 0; step < steps; ++step) {
    Tape<float> tape;
    const auto vars = trace::bind(tape, gen, true);
    const Var zv = tape.input(Tensor<float>({1, z.size()}, z), false, "z");
    const Var w = trace::map_latent(tape, gen, vars, zv, std::nullopt);
    const auto affine = trace::affine_from_w(tape, gen, vars, w);
    const Var x = tape.input(coords, false, "coords");
    const Var img = trace::synthesize(tape, gen, vars, affine, x);
    const Var loss = tape.mse(img, tape.leaf_ref(target.pixels(), false, "target"));
    const double value = tape.scalar(loss);
    check_loss(value, "at fit step " + std::to_string(step));
    result.loss_history.push_back(value);
    tape.backward(loss);
    const auto grads = collect_grads(tape, vars.all());
    auto params = tensors_of(gen);
    adam.update(params, grads, names);
  }
  const auto w = map_latent<float>(gen, z);
  result.render = synthesize(gen, affine_from_w<float>(gen, w),
                             make_grid(target.height(), target.width()));
  return result;
}

template <typename T>
BasicDiscriminator<T>::BasicDiscriminator(DiscriminatorConfig config) : config_(config) {
  if (config_.resolution < 1 || config_.hidden < 1) {
    throw ArgumentError("discriminator: resolution and hidden width must be >= 1");
  }
  if (!(config_.leaky_slope > 0.0 && config_.leaky_slope < 1.0)) {
    throw ArgumentError("discriminator: leaky_slope must lie in (0, 1)");
  }
  const std::size_t h = config_.hidden;
  layer0 = {Tensor<T>({input_dim(), h}), Tensor<T>({1, h})};
  layer1 = {Tensor<T>({h, h}), Tensor<T>({1, h})};
  layer2 = {Tensor<T>({h, 1}), Tensor<T>({1, 1})};
}

template <typename T>
template <typename U>
BasicDiscriminator<U> BasicDiscriminator<T>::cast() const {
  BasicDiscriminator<U> out(config_);
  out.layer0 = {layer0.weight.template cast<U>(), layer0.bias.template cast<U>()};
  out.layer1 = {layer1.weight.template cast<U>(), layer1.bias.template cast<U>()};
  out.layer2 = {layer2.weight.template cast<U>(), layer2.bias.template cast<U>()};
  return out;
}

template <typename T>
BasicDiscriminator<T> init_discriminator(const DiscriminatorConfig& config, std::uint64_t seed) {
  BasicDiscriminator<T> d(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto* l : {&d.layer0, &d.layer1, &d.layer2}) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(l->weight.rows()));
    for (T& v : l->weight.data()) v = static_cast<T>(normal(rng) * scale);
  }
  return d;
}

namespace trace {

template <typename T>
DiscriminatorVars<T> bind(Tape<T>& tape, const BasicDiscriminator<T>& d, bool requires_grad) {
  return {tape.leaf_ref(d.layer0.weight, requires_grad, "disc.0.weight"),
          tape.leaf_ref(d.layer0.bias, requires_grad, "disc.0.bias"),
          tape.leaf_ref(d.layer1.weight, requires_grad, "disc.1.weight"),
          tape.leaf_ref(d.layer1.bias, requires_grad, "disc.1.bias"),
          tape.leaf_ref(d.layer2.weight, requires_grad, "disc.2.weight"),
          tape.leaf_ref(d.layer2.bias, requires_grad, "disc.2.bias")};
}

namespace {

template <typename T>
Var flatten(Tape<T>& tape, const BasicDiscriminator<T>& d, Var image) {
  const auto& shape = tape.shape(image);
  if (shape_numel(shape) != d.input_dim()) {
    throw ArgumentError("discriminator expects a " + std::to_string(d.config().resolution) + "x" +
                        std::to_string(d.config().resolution) + " image, got " +
                        shape_to_string(shape) + " pixels");
  }
  return tape.reshape(image, {1, d.input_dim()});
}

template <typename T>
Tensor<T> slope_mask(const Tensor<T>& pre, T slope) {
  Tensor<T> m(pre.shape());
  for (std::size_t i = 0; i < pre.size(); ++i) m[i] = pre[i] > T(0) ? T(1) : slope;
  return m;
}

}  // namespace

template <typename T>
Var discriminator(Tape<T>& tape, const BasicDiscriminator<T>& d, const DiscriminatorVars<T>& v,
                  Var image) {
  const T slope = static_cast<T>(d.config().leaky_slope);
  Var h = flatten(tape, d, image);
  h = tape.leaky_relu(tape.add_row(tape.matmul(h, v.w0), v.b0), slope);
  h = tape.leaky_relu(tape.add_row(tape.matmul(h, v.w1), v.b1), slope);
  return tape.add_row(tape.matmul(h, v.w2), v.b2);
}

template <typename T>
Var discriminator_input_gradient(Tape<T>& tape, const BasicDiscriminator<T>& d,
                                 const DiscriminatorVars<T>& v, Var image) {
  const T slope = static_cast<T>(d.config().leaky_slope);
  const Var x = flatten(tape, d, image);
  const Var pre0 = tape.add_row(tape.matmul(x, v.w0), v.b0);
  const Var pre1 = tape.add_row(tape.matmul(tape.leaky_relu(pre0, slope), v.w1), v.b1);
  const Var mask0 = tape.constant(slope_mask(tape.value(pre0), slope), "mask0");
  const Var mask1 = tape.constant(slope_mask(tape.value(pre1), slope), "mask1");
  const Var g1 = tape.mul(tape.reshape(v.w2, {1, d.config().hidden}), mask1);
  const Var g0 = tape.mul(tape.matmul_nt(g1, v.w1), mask0);
  return tape.matmul_nt(g0, v.w0);
}

}  // namespace trace

template <typename T>
T discriminator_forward(const BasicDiscriminator<T>& disc, const ImageBuffer<T>& image) {
  if (image.height() != disc.config().resolution || image.width() != disc.config().resolution) {
    throw ArgumentError("discriminator expects " + std::to_string(disc.config().resolution) +
                        "x" + std::to_string(disc.config().resolution) + ", got " +
                        std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  Tape<T> tape;
  const auto vars = trace::bind(tape, disc, false);
  return tape.scalar(
      trace::discriminator(tape, disc, vars, tape.leaf_ref(image.pixels(), false, "image")));
}

template <typename T>
T r1_penalty(const BasicDiscriminator<T>& disc, const ImageBuffer<T>& image, double gamma) {
  Tape<T> tape;
  const auto vars = trace::bind(tape, disc, false);
  const Var g = trace::discriminator_input_gradient(
      tape, disc, vars, tape.leaf_ref(image.pixels(), false, "image"));
  return static_cast<T>(gamma / 2.0) * tape.scalar(tape.sum(tape.mul(g, g)));
}

void Schedule::validate() const {
  if (stages.empty()) throw ArgumentError("schedule has no stages");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    if (s.resolution < 2) throw ArgumentError("schedule stage resolution must be >= 2");
    if (s.image_budget == 0 || s.batch_size == 0) {
      throw ArgumentError("schedule stage budget and batch size must be positive");
    }
    if (!(s.generator_lr > 0.0) || !(s.discriminator_lr > 0.0)) {
      throw ArgumentError("schedule learning rates must be positive");
    }
    if (i > 0 && s.resolution <= stages[i - 1].resolution) {
      throw ArgumentError("schedule resolutions must be strictly increasing");
    }
  }
}

Schedule parse_schedule(const std::string& text, double generator_lr, double discriminator_lr) {
  Schedule schedule;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    Stage stage;
    stage.generator_lr = generator_lr;
    stage.discriminator_lr = discriminator_lr;
    char colon = 0, times = 0;
    std::istringstream is(item);
    if (!(is >> stage.resolution >> colon >> stage.image_budget >> times >> stage.batch_size) ||
        colon != ':' || (times != 'x' && times != 'X') || !(is >> std::ws).eof()) {
      throw ArgumentError("bad schedule stage '" + item + "', expected RES:BUDGETxBATCH");
    }
    schedule.stages.push_back(stage);
  }
  schedule.validate();
  return schedule;
}

template <typename T>
ImageBuffer<T> resize_area(const ImageBuffer<T>& image, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ArgumentError("resize: target size must be positive");
  if (image.height() == height && image.width() == width) return image;
  const double sy = static_cast<double>(image.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(image.width()) / static_cast<double>(width);
  ImageBuffer<T> out(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    const double y0 = r * sy, y1 = (r + 1) * sy;
    for (std::size_t c = 0; c < width; ++c) {
      const double x0 = c * sx, x1 = (c + 1) * sx;
      double acc[3] = {0, 0, 0};
      double total = 0;
      for (auto yi = static_cast<std::size_t>(y0); yi < image.height() && yi < y1; ++yi) {
        const double wy = std::min<double>(yi + 1, y1) - std::max<double>(yi, y0);
        if (wy <= 0) continue;
        for (auto xi = static_cast<std::size_t>(x0); xi < image.width() && xi < x1; ++xi) {
          const double wx = std::min<double>(xi + 1, x1) - std::max<double>(xi, x0);
          if (wx <= 0) continue;
          for (std::size_t ch = 0; ch < 3; ++ch) acc[ch] += wy * wx * image.at(yi, xi, ch);
          total += wy * wx;
        }
      }
      for (std::size_t ch = 0; ch < 3; ++ch) out.at(r, c, ch) = static_cast<T>(acc[ch] / total);
    }
  }
  return out;
}

std::vector<ImageBuffer<float>> make_blob_dataset(std::size_t count, std::size_t size,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.25, 0.75);
  std::uniform_real_distribution<double> rad(0.12, 0.25);
  std::uniform_real_distribution<double> col(-0.2, 1.0);
  std::vector<ImageBuffer<float>> out;
  const auto grid = make_grid(size, size);
  for (std::size_t i = 0; i < count; ++i) {
    const double cx = pos(rng), cy = pos(rng), r = rad(rng);
    const double color[3] = {col(rng), col(rng), col(rng)};
    ImageBuffer<float> img(size, size);
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const double dx = grid.x(x) - cx, dy = grid.y(y) - cy;
        const double g = std::exp(-(dx * dx + dy * dy) / (2 * r * r));
        for (std::size_t ch = 0; ch < 3; ++ch) {
          img.at(y, x, ch) = static_cast<float>(-0.8 + g * (color[ch] + 0.8));
        }
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

ImageBuffer<float> make_radial_gradient(std::size_t height, std::size_t width) {
  ImageBuffer<float> img(height, width);
  const auto grid = make_grid(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double dx = grid.x(x) - 0.5, dy = grid.y(y) - 0.5;
      const double r = std::sqrt(dx * dx + dy * dy) / std::sqrt(0.5);
      img.at(y, x, 0) = static_cast<float>(1.0 - 2.0 * r);
      img.at(y, x, 1) = static_cast<float>(0.8 * std::cos(3.0 * r));
      img.at(y, x, 2) = static_cast<float>(2.0 * r * r - 0.9);
    }
  }
  return img;
}

namespace {

std::vector<std::vector<float>> draw_latents(const GeneratorConfig& cfg, std::size_t count,
                                             std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<float>> out(count, std::vector<float>(cfg.z_dim));
  for (auto& z : out) {
    for (float& v : z) v = static_cast<float>(normal(rng));
  }
  return out;
}

Var generate(Tape<float>& tape, const Generator& gen, const trace::GeneratorVars<float>& vars,
             const std::vector<float>& z, Var coords) {
  const Var zv = tape.constant(Tensor<float>({1, z.size()}, z), "z");
  const Var w = trace::map_latent(tape, gen, vars, zv, std::nullopt);
  const auto affine = trace::affine_from_w(tape, gen, vars, w);
  return trace::synthesize(tape, gen, vars, affine, coords);
}

}  // namespace

AdversarialResult train_adversarial(const GeneratorConfig& config,
                                    const std::vector<ImageBuffer<float>>& dataset,
                                    const Schedule& schedule, std::uint64_t seed,
                                    const AdversarialOptions& options) {
  if (dataset.empty()) throw ArgumentError("train: dataset is empty");
  if (config.num_classes > 0) throw ArgumentError("train: use an unconditional generator config");
  schedule.validate();

  AdversarialResult result{init_generator<float>(config, seed), {}};
  Generator& gen = result.generator;
  std::mt19937_64 rng(seed ^ 0x5bd1e995u);
  const auto gen_names = names_of(gen);
  AdamState<float> gen_adam(options.adam);

  for (std::size_t s = 0; s < schedule.stages.size(); ++s) {
    const Stage& stage = schedule.stages[s];
    if (options.on_stage_start) options.on_stage_start(s, gen);
    const std::size_t res = stage.resolution;
    std::vector<ImageBuffer<float>> reals;
    reals.reserve(dataset.size());
    for (const auto& img : dataset) reals.push_back(resize_area(img, res, res));

    auto disc = init_discriminator<float>({res, options.discriminator_hidden, 0.2},
                                          seed + 1000003ull * (s + 1));
    AdamState<float> disc_adam(options.adam);
    disc_adam.set_lr(stage.discriminator_lr);
    gen_adam.set_lr(stage.generator_lr);

    const auto coords = make_grid(res, res).pixel_rows<float>();
    std::uniform_int_distribution<std::size_t> pick(0, reals.size() - 1);
    StageStats stats;
    stats.resolution = res;
    stats.steps = stage.steps();
    stats.generator_params = gen.parameter_count();
    const double batch = static_cast<double>(stage.batch_size);
    auto where = [&](std::size_t step) {
      return "at stage " + std::to_string(s) + " (" + std::to_string(res) + "x" +
             std::to_string(res) + ") step " + std::to_string(step);
    };

    for (std::size_t step = 0; step < stage.steps(); ++step) {
      // Discriminator update.
      {
        Tape<float> tape;
        const auto gvars = trace::bind(tape, gen, false);
        const auto dvars = trace::bind(tape, disc, true);
        const Var x = tape.constant(coords, "coords");
        const auto zs = draw_latents(config, stage.batch_size, rng);
        const bool regularize = options.r1_interval > 0 && step % options.r1_interval == 0;
        Var total;
        Var r1_total;
        std::size_t correct = 0;
        for (std::size_t b = 0; b < stage.batch_size; ++b) {
          const Var real = tape.leaf_ref(reals[pick(rng)].pixels(), false, "real");
          const Var fake = tape.constant(tape.value(generate(tape, gen, gvars, zs[b], x)), "fake");
          const Var real_logit = trace::discriminator(tape, disc, dvars, real);
          const Var fake_logit = trace::discriminator(tape, disc, dvars, fake);
          correct += tape.scalar(real_logit) > 0.0f;
          correct += tape.scalar(fake_logit) < 0.0f;
          const Var term = tape.add(tape.softplus(tape.scale(real_logit, -1.0f)),
                                    tape.softplus(fake_logit));
          total = total.valid() ? tape.add(total, term) : term;
          if (regularize) {
            const Var g = trace::discriminator_input_gradient(tape, disc, dvars, real);
            const Var sq = tape.sum(tape.mul(g, g));
            r1_total = r1_total.valid() ? tape.add(r1_total, sq) : sq;
          }
        }
        Var loss = tape.scale(total, static_cast<float>(1.0 / batch));
        if (regularize) {
          const Var r1 = tape.scale(r1_total, static_cast<float>(options.r1_gamma / 2.0 / batch));
          stats.r1.push_back(tape.scalar(r1));
          loss = tape.add(loss, r1);
        }
        const double value = tape.scalar(loss);
        check_loss(value, "(discriminator) " + where(step));
        stats.d_loss.push_back(value);
        stats.d_accuracy.push_back(static_cast<double>(correct) / (2.0 * batch));
        tape.backward(loss);
        const auto grads = collect_grads(tape, dvars.all());
        auto params = disc.parameters();
        disc_adam.update(params, grads);
      }
      // Generator update.
      {
        Tape<float> tape;
        const auto gvars = trace::bind(tape, gen, true);
        const auto dvars = trace::bind(tape, disc, false);
        const Var x = tape.constant(coords, "coords");
        const auto zs = draw_latents(config, stage.batch_size, rng);
        Var total;
        for (std::size_t b = 0; b < stage.batch_size; ++b) {
          const Var fake = generate(tape, gen, gvars, zs[b], x);
          const Var logit = trace::discriminator(tape, disc, dvars, fake);
          const Var term = tape.softplus(tape.scale(logit, -1.0f));
          total = total.valid() ? tape.add(total, term) : term;
        }
        const Var loss = tape.scale(total, static_cast<float>(1.0 / batch));
        const double value = tape.scalar(loss);
        check_loss(value, "(generator) " + where(step));
        stats.g_loss.push_back(value);
        tape.backward(loss);
        const auto grads = collect_grads(tape, gvars.all());
        auto params = tensors_of(gen);
        gen_adam.update(params, grads, gen_names);
      }
    }
    result.stages.push_back(std::move(stats));
    if (options.on_stage_end) options.on_stage_end(s, gen);
  }
  return result;
}

template class BasicDiscriminator<float>;
template class BasicDiscriminator<double>;
template BasicDiscriminator<double> BasicDiscriminator<float>::cast<double>() const;
template BasicDiscriminator<float> init_discriminator<float>(const DiscriminatorConfig&,
                                                            std::uint64_t);
template BasicDiscriminator<double> init_discriminator<double>(const DiscriminatorConfig&,
                                                              std::uint64_t);
template float discriminator_forward(const BasicDiscriminator<float>&, const ImageBuffer<float>&);
template double discriminator_forward(const BasicDiscriminator<double>&,
                                      const ImageBuffer<double>&);
template float r1_penalty(const BasicDiscriminator<float>&, const ImageBuffer<float>&, double);
template double r1_penalty(const BasicDiscriminator<double>&, const ImageBuffer<double>&, double);
template ImageBuffer<float> resize_area(const ImageBuffer<float>&, std::size_t, std::size_t);
template ImageBuffer<double> resize_area(const ImageBuffer<double>&, std::size_t, std::size_t);
template trace::DiscriminatorVars<float> trace::bind(Tape<float>&, const BasicDiscriminator<float>&,
                                                     bool);
template trace::DiscriminatorVars<double> trace::bind(Tape<double>&,
                                                      const BasicDiscriminator<double>&, bool);
template Var trace::discriminator(Tape<float>&, const BasicDiscriminator<float>&,
                                  const trace::DiscriminatorVars<float>&, Var);
template Var trace::discriminator(Tape<double>&, const BasicDiscriminator<double>&,
                                  const trace::DiscriminatorVars<double>&, Var);
template Var trace::discriminator_input_gradient(Tape<float>&, const BasicDiscriminator<float>&,
                                                 const trace::DiscriminatorVars<float>&, Var);
template Var trace::discriminator_input_gradient(Tape<double>&, const BasicDiscriminator<double>&,
                                                 const trace::DiscriminatorVars<double>&, Var);

}  // namespace polyinr
