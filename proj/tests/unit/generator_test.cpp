#include "polyinr/generator.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "../test_util.hpp"

using namespace polyinr;
using polyinr::testing::forward_differences;
using polyinr::testing::random_affine;
using polyinr::testing::small_config;

TEST(GeneratorInit, SameSeedSameWeights) {
  const auto cfg = small_config();
  EXPECT_TRUE(bitwise_equal(init_generator(cfg, 42), init_generator(cfg, 42)));
  EXPECT_FALSE(bitwise_equal(init_generator(cfg, 42), init_generator(cfg, 43)));
}

TEST(GeneratorInit, InvalidConfigRejected) {
  auto cfg = small_config();
  cfg.levels = 0;
  EXPECT_THROW(init_generator(cfg, 1), ArgumentError);
  cfg = small_config();
  cfg.leaky_slope = 1.0;
  EXPECT_THROW(init_generator(cfg, 1), ArgumentError);
  cfg = small_config();
  cfg.feature_dim = 0;
  EXPECT_THROW(count_params(cfg), ArgumentError);
}

TEST(GeneratorInit, CountMatchesAllocation) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    auto cfg = polyinr::testing::random_config(rng);
    if (i % 2) {
      cfg.num_classes = 3;
      cfg.class_embed_dim = 5;
    }
    EXPECT_EQ(count_params(cfg), init_generator(cfg, i).parameter_count());
  }
}

TEST(GeneratorInit, AffineHeadStartsNearConstantImage) {
  const auto gen = init_generator(small_config(2, 16), 3);
  const auto& bias = gen.weights().affine_heads[0].bias;
  for (std::size_t j = 0; j < 16; ++j) {
    EXPECT_EQ(bias[3 * j], 0.0f);
    EXPECT_EQ(bias[3 * j + 1], 0.0f);
  }
  EXPECT_NE(bias[2], 0.0f);
}

TEST(GeneratorInit, CanonicalParameterOrder) {
  auto cfg = small_config(2, 4);
  cfg.num_classes = 2;
  const auto gen = init_generator(cfg, 0);
  std::vector<std::string> names;
  for (const auto& p : gen.parameters()) names.push_back(p.name);
  const std::vector<std::string> expected{
      "class_embedding",      "mapping.0.weight",     "mapping.0.bias",   "mapping.1.weight",
      "mapping.1.bias",       "affine_head.0.weight", "affine_head.0.bias", "synthesis.0.weight",
      "synthesis.0.bias",     "affine_head.1.weight", "affine_head.1.bias", "synthesis.1.weight",
      "synthesis.1.bias",     "rgb_head.weight",      "rgb_head.bias"};
  EXPECT_EQ(names, expected);
}

TEST(CountParams, HandEnumeratedTinyConfig) {
  GeneratorConfig cfg;
  cfg.levels = 1;
  cfg.feature_dim = 2;
  cfg.z_dim = 2;
  cfg.w_dim = 4;
  // mapping.0 2x4 + 4, mapping.1 4x4 + 4, affine head 4x6 + 6, synthesis 2x2 + 2, rgb 2x3 + 3.
  const std::vector<std::pair<int, int>> shapes{{2, 4}, {1, 4}, {4, 4}, {1, 4}, {4, 6},
                                                {1, 6}, {2, 2}, {1, 2}, {2, 3}, {1, 3}};
  std::uint64_t expected = 0;
  for (auto [r, c] : shapes) expected += r * c;
  EXPECT_EQ(expected, 77u);
  EXPECT_EQ(count_params(cfg), expected);
}

TEST(CountParams, AblationTableAnchors) {
  GeneratorConfig cfg;  // z=64, w=512, n=512
  cfg.levels = 10;
  EXPECT_NEAR(count_params(cfg) / 1e6, 13.52, 0.25 * 13.52);
  cfg.levels = 2;
  EXPECT_NEAR(count_params(cfg) / 1e6, 2.98, 0.25 * 2.98);
}

TEST(CountParams, MonotoneInLevelsAndWidth) {
  GeneratorConfig cfg;
  std::uint64_t prev = 0;
  for (std::size_t levels : {2, 4, 7, 10, 14}) {
    cfg.levels = levels;
    const auto now = count_params(cfg);
    EXPECT_GT(now, prev);
    prev = now;
    auto wider = cfg;
    wider.feature_dim = 1024;
    EXPECT_GT(count_params(wider), now);
  }
}

TEST(MapLatent, DefaultConfigGives512) {
  GeneratorConfig cfg;
  cfg.levels = 1;
  cfg.feature_dim = 4;
  const auto gen = init_generator(cfg, 1);
  const auto z = random_latent(cfg, 2);
  const auto w = map_latent<float>(gen, z);
  EXPECT_EQ(w.size(), 512u);
  EXPECT_EQ(w, map_latent<float>(gen, z));
}

TEST(MapLatent, ArgumentChecks) {
  const auto gen = init_generator(small_config(), 1);
  std::vector<float> z(3);
  EXPECT_THROW(map_latent<float>(gen, z), ArgumentError);
  std::vector<float> ok(4);
  EXPECT_THROW(map_latent<float>(gen, ok, 0), ArgumentError);

  auto cfg = small_config();
  cfg.num_classes = 3;
  const auto cond = init_generator(cfg, 1);
  EXPECT_THROW(map_latent<float>(cond, ok), ArgumentError);
  EXPECT_THROW(map_latent<float>(cond, ok, 3), ArgumentError);
  EXPECT_NE(map_latent<float>(cond, ok, 0), map_latent<float>(cond, ok, 2));
}

TEST(MapLatent, ConditionalEqualsExplicitConcatenation) {
  auto cfg = small_config();
  cfg.num_classes = 2;
  cfg.class_embed_dim = 3;
  const auto gen = init_generator<double>(cfg, 9);
  const auto z = random_latent<double>(cfg, 4);
  const auto w = map_latent<double>(gen, z, 1);
  // Reference: h = leaky([z, e] W0 + b0), w = h W1 + b1.
  const auto& wt = gen.weights();
  std::vector<double> in(z.begin(), z.end());
  for (std::size_t k = 0; k < 3; ++k) in.push_back(wt.class_embedding(1, k));
  std::vector<double> h(cfg.w_dim);
  for (std::size_t j = 0; j < cfg.w_dim; ++j) {
    double s = wt.mapping0.bias[j];
    for (std::size_t k = 0; k < in.size(); ++k) s += in[k] * wt.mapping0.weight(k, j);
    h[j] = s > 0 ? s : 0.2 * s;
  }
  for (std::size_t j = 0; j < cfg.w_dim; ++j) {
    double s = wt.mapping1.bias[j];
    for (std::size_t k = 0; k < cfg.w_dim; ++k) s += h[k] * wt.mapping1.weight(k, j);
    EXPECT_NEAR(w[j], s, 1e-12);
  }
}

TEST(AffineFromW, ShapesAndZeroInput) {
  const auto cfg = small_config(3, 5);
  const auto gen = init_generator(cfg, 4);
  std::vector<float> w(cfg.w_dim, 0.0f);
  const auto a = affine_from_w<float>(gen, w);
  ASSERT_EQ(a.level_count(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.levels[i].shape(), (Shape{5, 3}));
    EXPECT_EQ(a.levels[i].storage(), gen.weights().affine_heads[i].bias.storage());
  }
  EXPECT_TRUE(bitwise_equal(a, affine_from_w<float>(gen, w)));
  EXPECT_THROW(affine_from_w<float>(gen, std::vector<float>(7)), ArgumentError);
}

TEST(Synthesize, ZeroCoordinateCoefficientsGiveConstantImage) {
  std::mt19937_64 rng(2);
  const auto cfg = small_config(4, 12);
  const auto gen = init_generator(cfg, 6);
  auto affine = random_affine<float>(cfg, rng);
  for (auto& a : affine.levels) {
    for (std::size_t j = 0; j < cfg.feature_dim; ++j) a(j, 0) = a(j, 1) = 0.0f;
  }
  const auto img = synthesize(gen, affine, make_grid(9, 13));
  for (std::size_t ch = 0; ch < 3; ++ch) {
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
      ASSERT_EQ(img.pixels()(p, ch), img.pixels()(0, ch));
    }
  }
}

TEST(Synthesize, SubsetRenderMatchesFullRender) {
  std::mt19937_64 rng(12);
  const auto cfg = small_config(3, 10);
  const auto gen = init_generator(cfg, 6);
  const auto affine = random_affine<float>(cfg, rng);
  const auto grid = make_grid(40, 45);  // spans two render chunks
  const auto full = synthesize(gen, affine, grid);
  std::vector<std::size_t> subset{1799, 0, 1023, 1024, 77};
  const auto part = synthesize_pixels(gen, affine, grid, subset);
  for (std::size_t i = 0; i < subset.size(); ++i) {
    for (std::size_t ch = 0; ch < 3; ++ch) EXPECT_EQ(part(i, ch), full.pixels()(subset[i], ch));
  }
}

TEST(Synthesize, MismatchedAffineRejected) {
  std::mt19937_64 rng(1);
  const auto gen = init_generator(small_config(3, 8), 0);
  auto affine = random_affine<float>(small_config(2, 8), rng);
  EXPECT_THROW(synthesize(gen, affine, make_grid(2, 2)), ArgumentError);
  affine = random_affine<float>(small_config(3, 7), rng);
  EXPECT_THROW(synthesize(gen, affine, make_grid(2, 2)), ArgumentError);
}

TEST(Synthesize, IdentityActivationGivesBoundedDegree) {
  // With identity activations each level multiplies by one affine function of
  // (x, y), so along a line the output is a polynomial of degree <= levels + 1
  // and its (levels + 2)-th differences vanish.
  std::mt19937_64 rng(31);
  for (std::size_t levels = 1; levels <= 4; ++levels) {
    auto cfg = small_config(levels, 8);
    cfg.test_identity_activation = true;
    const auto gen = init_generator<double>(cfg, levels);
    const auto affine = random_affine<double>(cfg, rng);
    const std::size_t side = levels + 6;
    const auto img = synthesize(gen, affine, make_grid(side, side));
    for (std::size_t ch = 0; ch < 3; ++ch) {
      for (std::size_t r = 0; r < side; ++r) {
        std::vector<double> line;
        for (std::size_t c = 0; c < side; ++c) line.push_back(img.at(r, c, ch));
        const auto [lo, hi] = std::minmax_element(line.begin(), line.end());
        const double range = *hi - *lo;
        for (double d : forward_differences(line, levels + 2)) EXPECT_LT(std::abs(d), 1e-6 * range);
      }
    }
  }
}

TEST(Sample, EqualsThreeStepPipeline) {
  const auto cfg = small_config(3, 8);
  const auto gen = init_generator(cfg, 11);
  const auto z = random_latent(cfg, 5);
  const auto direct = sample<float>(gen, z, std::nullopt, 6, 7);
  const auto w = map_latent<float>(gen, z);
  const auto piped = synthesize(gen, affine_from_w<float>(gen, w), make_grid(6, 7));
  EXPECT_EQ(direct.height(), 6u);
  EXPECT_EQ(direct.width(), 7u);
  EXPECT_TRUE(bitwise_equal(direct, piped));
}

TEST(Sample, DifferentGridSizesFromOneLatent) {
  const auto cfg = small_config(3, 8);
  const auto gen = init_generator(cfg, 11);
  const auto z = random_latent(cfg, 5);
  const auto small = sample<float>(gen, z, std::nullopt, 32, 32);
  const auto big = sample<float>(gen, z, std::nullopt, 64, 64);
  EXPECT_TRUE(small.pixels().all_finite());
  EXPECT_TRUE(big.pixels().all_finite());
  EXPECT_LT(make_grid(64, 64).x(1), make_grid(32, 32).x(1));
  // Shared corners are shared coordinates.
  for (std::size_t ch = 0; ch < 3; ++ch) {
    EXPECT_EQ(small.at(0, 0, ch), big.at(0, 0, ch));
    EXPECT_EQ(small.at(31, 31, ch), big.at(63, 63, ch));
  }
}

TEST(LevelFeatures, ShapeConsistencyAndRange) {
  std::mt19937_64 rng(4);
  const auto cfg = small_config(3, 9);
  const auto gen = init_generator(cfg, 2);
  const auto affine = random_affine<float>(cfg, rng);
  const auto grid = make_grid(5, 6);
  const auto f = level_features(gen, affine, grid, 1);
  EXPECT_EQ(f.shape(), (Shape{30, 9}));
  const auto last = level_features(gen, affine, grid, 2);
  EXPECT_TRUE(bitwise_equal(apply_rgb_head(gen, last), synthesize(gen, affine, grid).pixels()));
  EXPECT_THROW(level_features(gen, affine, grid, 3), ArgumentError);
}

TEST(Generator, CastRoundTrip) {
  const auto gen = init_generator(small_config(), 3);
  EXPECT_TRUE(bitwise_equal(gen.cast<double>().cast<float>(), gen));
}
