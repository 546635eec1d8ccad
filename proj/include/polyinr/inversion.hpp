#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "polyinr/generator.hpp"

namespace polyinr {

enum class InversionInit { MeanAffine, FromSeed };
enum class InversionLoss { Mse, MseGradient };

struct InversionConfig {
  std::size_t steps = 1000;
  double lr = 0.01;
  InversionInit init = InversionInit::MeanAffine;
  std::uint64_t seed = 0;            // latent seed for FromSeed and for the mean draws
  std::size_t mean_samples = 1000;   // latents averaged by MeanAffine
  InversionLoss loss = InversionLoss::Mse;
  std::size_t log_every = 0;         // 0 disables progress logging
  std::optional<std::size_t> class_id;

  void validate() const;
};

struct InversionResult {
  AffineParams<float> affine;       // best loss seen
  std::vector<double> loss_history;  // entry k: loss after k updates
  double best_loss = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

// Average of affine_from_w(map_latent(z)) over `samples` seeded latents.
AffineParams<float> mean_affine(const Generator& gen, std::size_t samples, std::uint64_t seed,
                                std::optional<std::size_t> class_id = std::nullopt);

// Fits affine parameters to target with Adam while the generator stays frozen.
InversionResult invert(const Generator& gen, const ImageBuffer<float>& target,
                       const InversionConfig& config);

}  // namespace polyinr
