#include "polyinr/grid.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace polyinr;

namespace {

std::vector<std::array<double, 3>> columns(const CoordinateGrid& g) {
  const auto x = g.homogeneous<double>();
  std::vector<std::array<double, 3>> out;
  for (std::size_t p = 0; p < g.pixel_count(); ++p) out.push_back({x(0, p), x(1, p), x(2, p)});
  return out;
}

}  // namespace

TEST(Grid, TwoByTwoUnit) {
  const auto cols = columns(make_grid(2, 2));
  const std::vector<std::array<double, 3>> expected{{0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
  EXPECT_EQ(cols, expected);
}

TEST(Grid, SinglePixelSitsAtRegionMinimum) {
  const auto cols = columns(make_grid(1, 1));
  ASSERT_EQ(cols.size(), 1u);
  EXPECT_EQ(cols[0], (std::array<double, 3>{0, 0, 1}));
  const auto shifted = columns(make_grid(1, 3, Region{0.5, 2.0, -1.0, 3.0}));
  EXPECT_EQ(shifted[1], (std::array<double, 3>{1.25, -1.0, 1}));
}

TEST(Grid, ExtrapolationRegionCorners) {
  const auto g = make_grid(2, 2, Region::expanded(0.25));
  for (const auto& c : columns(g)) {
    EXPECT_TRUE(c[0] == -0.25 || c[0] == 1.25);
    EXPECT_TRUE(c[1] == -0.25 || c[1] == 1.25);
  }
}

TEST(Grid, UnitAxesSpanEvenSteps) {
  const auto g = make_grid(3, 5);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_DOUBLE_EQ(g.x(c), c / 4.0);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_DOUBLE_EQ(g.y(r), r / 2.0);
  const auto h = g.homogeneous<float>();
  EXPECT_EQ(h.shape(), (Shape{3, 15}));
  for (std::size_t p = 0; p < 15; ++p) EXPECT_EQ(h(2, p), 1.0f);
}

TEST(Grid, InvalidArguments) {
  EXPECT_THROW(make_grid(0, 3), ArgumentError);
  EXPECT_THROW(make_grid(3, 0), ArgumentError);
  EXPECT_THROW(make_grid(2, 2, Region{1.0, 0.0, 0.0, 1.0}), ArgumentError);
  EXPECT_THROW(nested_dense_grid(3, 3, 0), ArgumentError);
  EXPECT_THROW(nested_dense_grid(1, 3, 2), ArgumentError);
}

TEST(Grid, NestedFactorOneIsBaseGrid) {
  EXPECT_EQ(columns(nested_dense_grid(3, 3, 1)), columns(make_grid(3, 3)));
}

TEST(Grid, NestedTwoByTwoHasHalfSteps) {
  const auto g = nested_dense_grid(2, 2, 2);
  EXPECT_EQ(g.height(), 3u);
  EXPECT_EQ(g.width(), 3u);
  EXPECT_EQ(g.x(1), 0.5);
  EXPECT_EQ(g.y(2), 1.0);
}

TEST(Grid, NestingIsBitExactSubset) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> dim(2, 40);
  std::uniform_int_distribution<std::size_t> fac(1, 7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t h = dim(rng), w = dim(rng), f = fac(rng);
    const auto base = make_grid(h, w);
    const auto dense = nested_dense_grid(h, w, f);
    for (std::size_t c = 0; c < w; ++c) ASSERT_EQ(dense.x(f * c), base.x(c)) << h << "x" << w << " f" << f;
    for (std::size_t r = 0; r < h; ++r) ASSERT_EQ(dense.y(f * r), base.y(r));
  }
}

TEST(Grid, ExtrapolationContainsUnitGrid) {
  // (W - 1) divisible by 4 puts the unit grid on the expanded grid's lattice:
  // 1.5 (W - 1) + 1 samples over [-0.25, 1.25], offset (W - 1) / 4.
  for (std::size_t k = 1; k <= 30; ++k) {
    const std::size_t w = 4 * k + 1;
    const std::size_t ext = 6 * k + 1;
    const auto unit = make_grid(w, w);
    const auto big = make_grid(ext, ext, Region::expanded(0.25));
    for (std::size_t c = 0; c < w; ++c) {
      ASSERT_EQ(big.x(c + k), unit.x(c)) << "k=" << k << " c=" << c;
      ASSERT_EQ(big.y(c + k), unit.y(c));
    }
    EXPECT_EQ(big.x(0), -0.25);
    EXPECT_EQ(big.x(ext - 1), 1.25);
  }
}

TEST(Grid, RasterOrderRoundTrip) {
  const auto g = make_grid(7, 11);
  std::set<std::size_t> seen;
  for (std::size_t r = 0; r < 7; ++r) {
    for (std::size_t c = 0; c < 11; ++c) {
      const auto p = g.pixel_index(r, c);
      EXPECT_EQ(g.row_col(p), std::make_pair(r, c));
      seen.insert(p);
    }
  }
  EXPECT_EQ(seen.size(), 77u);
  EXPECT_EQ(*seen.rbegin(), 76u);
}

TEST(Grid, PixelRowsIsTransposeOfHomogeneous) {
  const auto g = make_grid(4, 6, Region{-1, 2, 0.5, 0.75});
  const auto h = g.homogeneous<double>();
  const auto p = g.pixel_rows<double>();
  for (std::size_t i = 0; i < g.pixel_count(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(p(i, k), h(k, i));
  }
  const auto sub = g.pixel_rows<double>({5, 0});
  EXPECT_EQ(sub(0, 0), p(5, 0));
  EXPECT_EQ(sub(1, 1), p(0, 1));
  EXPECT_THROW(g.pixel_rows<double>({24}), ArgumentError);
}
