#include "polyinr/inversion.hpp"

#include <cmath>
#include <iostream>

#include "polyinr/metrics.hpp"
#include "polyinr/training.hpp"

namespace polyinr {

void InversionConfig::validate() const {
  if (!(lr > 0.0)) throw ArgumentError("inversion: lr must be positive");
  if (init == InversionInit::MeanAffine && mean_samples == 0) {
    throw ArgumentError("inversion: mean_samples must be positive");
  }
}

AffineParams<float> mean_affine(const Generator& gen, std::size_t samples, std::uint64_t seed,
                                std::optional<std::size_t> class_id) {
  if (samples == 0) throw ArgumentError("mean_affine: samples must be positive");
  const auto& cfg = gen.config();
  AffineParams<double> acc;
  for (std::size_t i = 0; i < cfg.levels; ++i) acc.levels.emplace_back(Shape{cfg.feature_dim, 3});
  for (std::size_t s = 0; s < samples; ++s) {
    const auto z = random_latent<float>(cfg, seed + s);
    const auto w = map_latent<float>(gen, z, class_id);
    const auto a = affine_from_w<float>(gen, w);
    for (std::size_t i = 0; i < cfg.levels; ++i) {
      for (std::size_t k = 0; k < a.levels[i].size(); ++k) acc.levels[i][k] += a.levels[i][k];
    }
  }
  for (auto& t : acc.levels) {
    for (double& v : t.data()) v /= static_cast<double>(samples);
  }
  return acc.cast<float>();
}

namespace {

// Pairs of raster indices (p, q) where q is p's right (dx) or lower (dy) neighbour.
struct Neighbours {
  std::vector<std::size_t> from, right, below_from, below;
};

Neighbours neighbours(std::size_t h, std::size_t w) {
  Neighbours n;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t p = r * w + c;
      if (c + 1 < w) {
        n.from.push_back(p);
        n.right.push_back(p + 1);
      }
      if (r + 1 < h) {
        n.below_from.push_back(p);
        n.below.push_back(p + w);
      }
    }
  }
  return n;
}

Var reconstruction_loss(Tape<float>& tape, Var image, Var target, InversionLoss kind,
                        const Neighbours& nb) {
  Var loss = tape.mse(image, target);
  if (kind == InversionLoss::MseGradient) {
    auto diff = [&](Var img, const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
      return tape.sub(tape.gather_rows(img, b), tape.gather_rows(img, a));
    };
    loss = tape.add(loss, tape.mse(diff(image, nb.from, nb.right), diff(target, nb.from, nb.right)));
    loss = tape.add(loss, tape.mse(diff(image, nb.below_from, nb.below),
                                   diff(target, nb.below_from, nb.below)));
  }
  return loss;
}

}  // namespace

InversionResult invert(const Generator& gen, const ImageBuffer<float>& target,
                       const InversionConfig& config) {
  config.validate();
  if (target.height() < 2 || target.width() < 2) {
    throw ArgumentError("inversion: target must be at least 2x2");
  }
  const auto& cfg = gen.config();
  AffineParams<float> affine;
  if (config.init == InversionInit::MeanAffine) {
    affine = mean_affine(gen, config.mean_samples, config.seed, config.class_id);
  } else {
    const auto z = random_latent<float>(cfg, config.seed);
    affine = affine_from_w<float>(gen, map_latent<float>(gen, z, config.class_id));
  }

  const auto coords = make_grid(target.height(), target.width()).pixel_rows<float>();
  const Neighbours nb = neighbours(target.height(), target.width());
  AdamState<float> adam(AdamHyper{config.lr, 0.0, 0.99, 1e-8});

  InversionResult result;
  result.affine = affine;
  result.best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t step = 0;; ++step) {
    Tape<float> tape;
    const auto vars = trace::bind(tape, gen, false);
    std::vector<Var> a;
    for (const auto& t : affine.levels) a.push_back(tape.leaf_ref(t, true, "affine"));
    const Var x = tape.constant(coords, "coords");
    const Var img = trace::synthesize(tape, gen, vars, a, x);
    const Var tgt = tape.leaf_ref(target.pixels(), false, "target");
    const Var loss = reconstruction_loss(tape, img, tgt, config.loss, nb);
    const double value = tape.scalar(loss);
    if (!std::isfinite(value)) {
      throw NumericError("inversion: non-finite loss at step " + std::to_string(step));
    }
    result.loss_history.push_back(value);
    if (value < result.best_loss) {
      result.best_loss = value;
      result.affine = affine;
    }
    if (config.log_every && step % config.log_every == 0) {
      std::cerr << "invert step " << step << " loss " << value << '\n';
    }
    if (step == config.steps) break;
    tape.backward(loss);
    std::vector<Tensor<float>> grads;
    std::vector<Tensor<float>*> params;
    for (std::size_t i = 0; i < a.size(); ++i) {
      grads.push_back(tape.grad(a[i]));
      params.push_back(&affine.levels[i]);
    }
    adam.update(params, grads);
  }

  const auto render = synthesize(gen, result.affine, make_grid(target.height(), target.width()));
  result.psnr = psnr(render, target);
  result.ssim = ssim(render, target);
  return result;
}

}  // namespace polyinr
