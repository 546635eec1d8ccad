#include "polyinr/metrics.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace polyinr;

namespace {

ImageBuffer<double> uniform_image(std::size_t h, std::size_t w, std::uint64_t seed, double lo,
                                  double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ImageBuffer<double> img(h, w);
  for (double& v : img.pixels().data()) v = u(rng);
  return img;
}

}  // namespace

TEST(Psnr, IdenticalIsCapped) {
  const auto a = uniform_image(6, 5, 1, -1.0, 1.0);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
}

TEST(Psnr, OffsetPointOneIs20dB) {
  // Unit-range values in [0.1, 0.8] shifted by 0.1; in [-1, 1] that is +0.2.
  auto a = uniform_image(8, 8, 2, 0.1, 0.8);
  ImageBuffer<double> b(8, 8);
  for (std::size_t i = 0; i < a.pixels().size(); ++i) {
    a.pixels()[i] = 2.0 * a.pixels()[i] - 1.0;
    b.pixels()[i] = a.pixels()[i] + 0.2;
  }
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
}

TEST(Psnr, Symmetric) {
  const auto a = uniform_image(7, 7, 3, -1.0, 1.0);
  const auto b = uniform_image(7, 7, 4, -1.0, 1.0);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
}

TEST(Psnr, DecreasesWithNoise) {
  const auto a = uniform_image(16, 16, 5, -0.5, 0.5);
  const auto noise = uniform_image(16, 16, 6, -1.0, 1.0);
  double prev = kPsnrCap;
  for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    ImageBuffer<double> b = a;
    for (std::size_t i = 0; i < b.pixels().size(); ++i) b.pixels()[i] += amp * noise.pixels()[i];
    const double p = psnr(a, b);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Psnr, ShapeMismatch) {
  EXPECT_THROW(psnr(ImageBuffer<float>(2, 3), ImageBuffer<float>(3, 2)), ArgumentError);
}

TEST(Ssim, ConstantImagesHandValue) {
  // 0.3 and 0.7 on the unit range.
  const ImageBuffer<double> a(4, 4, -0.4);
  const ImageBuffer<double> b(4, 4, 0.4);
  const double expected = (2 * 0.3 * 0.7 + 1e-4) / (0.3 * 0.3 + 0.7 * 0.7 + 1e-4);
  EXPECT_NEAR(ssim(a, b), 0.7242, 5e-4);
  EXPECT_NEAR(ssim(a, b), expected, 1e-12);
}

TEST(Ssim, IdentityAndSymmetry) {
  const auto a = uniform_image(9, 9, 7, -1.0, 1.0);
  const auto b = uniform_image(9, 9, 8, -1.0, 1.0);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-15);
  EXPECT_EQ(ssim(a, b), ssim(b, a));
  EXPECT_LT(ssim(a, b), 1.0);
  EXPECT_GE(ssim(a, b), -1.0);
}

TEST(Ssim, ShapeMismatch) {
  EXPECT_THROW(ssim(ImageBuffer<double>(2, 2), ImageBuffer<double>(2, 3)), ArgumentError);
}
