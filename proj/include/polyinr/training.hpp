#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "polyinr/generator.hpp"

namespace polyinr {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are allocated on the first update
// and must keep the same shapes afterwards.
template <typename T>
class AdamState {
 public:
  explicit AdamState(AdamHyper hyper = {}) : hyper_(hyper) {}

  // params[i] -= step computed from grads[i]. names label errors.
  void update(std::span<Tensor<T>* const> params, std::span<const Tensor<T>> grads,
              std::span<const std::string> names = {});

  std::uint64_t step() const noexcept { return step_; }
  const AdamHyper& hyper() const noexcept { return hyper_; }
  void set_lr(double lr) noexcept { hyper_.lr = lr; }

 private:
  AdamHyper hyper_;
  std::uint64_t step_ = 0;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

struct FitResult {
  Generator generator;
  std::vector<double> loss_history;  // MSE before each update
  ImageBuffer<float> render;         // after the last update
};

// Trains every generator parameter so that the render of one fixed latent
// (drawn from seed) on the unit grid matches target under pixel MSE.
FitResult fit_single_image(const GeneratorConfig& config, const ImageBuffer<float>& target,
                           std::size_t steps, double lr, std::uint64_t seed);

struct DiscriminatorConfig {
  std::size_t resolution = 16;
  std::size_t hidden = 64;
  double leaky_slope = 0.2;
};

// Three linear layers over a flattened RGB image with leaky rectifiers
// between them and a scalar logit out.
template <typename T>
class BasicDiscriminator {
 public:
  explicit BasicDiscriminator(DiscriminatorConfig config);

  const DiscriminatorConfig& config() const noexcept { return config_; }
  std::size_t input_dim() const noexcept { return 3 * config_.resolution * config_.resolution; }

  Linear<T> layer0, layer1, layer2;

  std::vector<Tensor<T>*> parameters() {
    return {&layer0.weight, &layer0.bias, &layer1.weight, &layer1.bias, &layer2.weight,
            &layer2.bias};
  }

  template <typename U>
  BasicDiscriminator<U> cast() const;

 private:
  DiscriminatorConfig config_;
};

using Discriminator = BasicDiscriminator<float>;

template <typename T = float>
BasicDiscriminator<T> init_discriminator(const DiscriminatorConfig& config, std::uint64_t seed);

template <typename T>
T discriminator_forward(const BasicDiscriminator<T>& disc, const ImageBuffer<T>& image);

namespace trace {

template <typename T>
struct DiscriminatorVars {
  Var w0, b0, w1, b1, w2, b2;
  std::vector<Var> all() const { return {w0, b0, w1, b1, w2, b2}; }
};

template <typename T>
DiscriminatorVars<T> bind(Tape<T>& tape, const BasicDiscriminator<T>& disc, bool requires_grad);

// image is P x 3; returns the 1 x 1 logit.
template <typename T>
Var discriminator(Tape<T>& tape, const BasicDiscriminator<T>& disc,
                  const DiscriminatorVars<T>& vars, Var image);

// Gradient of the logit with respect to the flattened image (1 x 3P), built
// from differentiable primitives so it can itself be differentiated with
// respect to the discriminator weights. The rectifier slopes are piecewise
// constant, so they enter as constants read off the forward pass.
template <typename T>
Var discriminator_input_gradient(Tape<T>& tape, const BasicDiscriminator<T>& disc,
                                 const DiscriminatorVars<T>& vars, Var image);

}  // namespace trace

// (gamma / 2) * ||d logit / d image||^2 for one image.
template <typename T>
T r1_penalty(const BasicDiscriminator<T>& disc, const ImageBuffer<T>& image, double gamma = 1.0);

struct Stage {
  std::size_t resolution = 16;
  std::size_t image_budget = 1000;  // images shown to the generator
  std::size_t batch_size = 8;
  double generator_lr = 1e-4;
  double discriminator_lr = 2e-4;

  std::size_t steps() const noexcept { return (image_budget + batch_size - 1) / batch_size; }
};

struct Schedule {
  std::vector<Stage> stages;
  // Resolutions strictly increasing, budgets and batches positive.
  void validate() const;
};

// "16:1000x32,32:500x16" -> resolution:budget x batch per stage.
Schedule parse_schedule(const std::string& text, double generator_lr = 1e-4,
                        double discriminator_lr = 2e-4);

struct AdversarialOptions {
  std::size_t discriminator_hidden = 64;
  std::size_t r1_interval = 8;
  double r1_gamma = 1.0;
  AdamHyper adam{};  // lr fields are overridden per stage
  // Called with (stage index, generator) at the start and end of each stage.
  std::function<void(std::size_t, const Generator&)> on_stage_start;
  std::function<void(std::size_t, const Generator&)> on_stage_end;
};

struct StageStats {
  std::size_t resolution = 0;
  std::size_t steps = 0;
  std::uint64_t generator_params = 0;
  std::vector<double> d_loss;
  std::vector<double> g_loss;
  std::vector<double> r1;        // NaN-free; one entry per regularized step
  std::vector<double> d_accuracy;  // fraction of correct real/fake decisions per step
};

struct AdversarialResult {
  Generator generator;
  std::vector<StageStats> stages;
};

// Progressive non-saturating logistic GAN with lazy R1 on real images. The
// generator persists across stages; each stage gets a fresh discriminator at
// its resolution and area-downsampled real images.
AdversarialResult train_adversarial(const GeneratorConfig& config,
                                    const std::vector<ImageBuffer<float>>& dataset,
                                    const Schedule& schedule, std::uint64_t seed,
                                    const AdversarialOptions& options = {});

// Area-weighted resampling to height x width.
template <typename T>
ImageBuffer<T> resize_area(const ImageBuffer<T>& image, std::size_t height, std::size_t width);

// Gaussian blobs of random position, radius and colour on a dark background.
std::vector<ImageBuffer<float>> make_blob_dataset(std::size_t count, std::size_t size,
                                                  std::uint64_t seed);

// Smooth radial colour gradient, values in [-1, 1].
ImageBuffer<float> make_radial_gradient(std::size_t height, std::size_t width);

}  // namespace polyinr
