#include "polyinr/inversion.hpp"

#include <gtest/gtest.h>

#include "../test_util.hpp"
#include "polyinr/metrics.hpp"
#include "polyinr/training.hpp"

using namespace polyinr;
using polyinr::testing::small_config;

namespace {

GeneratorConfig inv_config() {
  GeneratorConfig c = small_config(4, 32);
  c.z_dim = 16;
  c.w_dim = 32;
  return c;
}

}  // namespace

TEST(Inversion, ZeroStepsReturnsInitialization) {
  const auto gen = init_generator(inv_config(), 2);
  const auto target = sample<float>(gen, random_latent<float>(gen.config(), 5), std::nullopt, 8, 8);
  InversionConfig ic;
  ic.steps = 0;
  ic.mean_samples = 20;
  const auto r = invert(gen, target, ic);
  EXPECT_TRUE(bitwise_equal(r.affine, mean_affine(gen, 20, ic.seed)));
  ASSERT_EQ(r.loss_history.size(), 1u);
  const auto render = synthesize(gen, r.affine, make_grid(8, 8));
  EXPECT_EQ(r.psnr, psnr(render, target));
  EXPECT_EQ(r.ssim, ssim(render, target));

  ic.init = InversionInit::FromSeed;
  ic.seed = 5;
  const auto same = invert(gen, target, ic);
  EXPECT_EQ(same.psnr, kPsnrCap);
  EXPECT_EQ(same.best_loss, 0.0);
}

TEST(Inversion, SelfGeneratedTargetRecovered) {
  const auto gen = init_generator(inv_config(), 11);
  const auto before = gen;
  const auto target =
      sample<float>(gen, random_latent<float>(gen.config(), 99), std::nullopt, 16, 16);
  InversionConfig ic;
  ic.steps = 300;
  ic.mean_samples = 100;
  const auto r = invert(gen, target, ic);
  EXPECT_GE(r.psnr, 35.0);
  EXPECT_TRUE(bitwise_equal(gen, before));
  EXPECT_EQ(r.loss_history.size(), 301u);
  double best = r.loss_history.front();
  for (double v : r.loss_history) best = std::min(best, v);
  EXPECT_EQ(r.best_loss, best);
}

TEST(Inversion, GradientLossVariantRuns) {
  const auto gen = init_generator(inv_config(), 3);
  const auto target = make_radial_gradient(8, 8);
  InversionConfig ic;
  ic.steps = 50;
  ic.mean_samples = 10;
  ic.loss = InversionLoss::MseGradient;
  const auto r = invert(gen, target, ic);
  EXPECT_LT(r.best_loss, r.loss_history.front());
}

TEST(Inversion, Errors) {
  const auto gen = init_generator(inv_config(), 3);
  InversionConfig ic;
  ic.lr = 0.0;
  EXPECT_THROW(invert(gen, make_radial_gradient(4, 4), ic), ArgumentError);
  ic.lr = 0.01;
  EXPECT_THROW(invert(gen, make_radial_gradient(1, 4), ic), ArgumentError);
  EXPECT_THROW(mean_affine(gen, 0, 0), ArgumentError);
}

TEST(MeanAffine, MatchesHandAverage) {
  const auto gen = init_generator(inv_config(), 4);
  const auto m = mean_affine(gen, 2, 10);
  const auto a = affine_from_w<float>(gen, map_latent<float>(gen, random_latent<float>(gen.config(), 10)));
  const auto b = affine_from_w<float>(gen, map_latent<float>(gen, random_latent<float>(gen.config(), 11)));
  for (std::size_t i = 0; i < m.levels.size(); ++i) {
    for (std::size_t k = 0; k < m.levels[i].size(); ++k) {
      EXPECT_FLOAT_EQ(m.levels[i][k], 0.5f * (a.levels[i][k] + b.levels[i][k]));
    }
  }
}
