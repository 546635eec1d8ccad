#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "polyinr/tensor.hpp"

namespace polyinr {

struct Region {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  static Region unit() { return {}; }
  // [-margin, 1 + margin]^2
  static Region expanded(double margin) { return {-margin, 1.0 + margin, -margin, 1.0 + margin}; }
  friend bool operator==(const Region&, const Region&) = default;
};

// Homogeneous pixel coordinates (x, y, 1) over a rectangular region.
//
// Pixels are ordered row-major (y outer, x inner). x varies along the width,
// y along the height. An axis of size 1 sits at the region minimum.
//
// Coordinates are computed as (min * (N - 1) + i * (max - min)) / (N - 1) in
// double precision. Grids whose sample points coincide as rationals therefore
// coincide bit for bit, which is what the nesting and extrapolation
// containment properties rely on.
class CoordinateGrid {
 public:
  CoordinateGrid(std::size_t height, std::size_t width, Region region = Region::unit());

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept { return height_ * width_; }
  const Region& region() const noexcept { return region_; }

  double x(std::size_t col) const { return xs_[col]; }
  double y(std::size_t row) const { return ys_[row]; }

  std::size_t pixel_index(std::size_t row, std::size_t col) const noexcept {
    return row * width_ + col;
  }
  std::pair<std::size_t, std::size_t> row_col(std::size_t pixel) const noexcept {
    return {pixel / width_, pixel % width_};
  }

  // The 3 x (H*W) matrix with rows x, y, 1.
  template <typename T>
  Tensor<T> homogeneous() const;

  // Same data transposed: one (x, y, 1) row per pixel, (H*W) x 3. This is the
  // layout synthesis consumes.
  template <typename T>
  Tensor<T> pixel_rows() const;

  // pixel_rows restricted to the given pixel indices, in the given order.
  template <typename T>
  Tensor<T> pixel_rows(const std::vector<std::size_t>& pixels) const;

 private:
  std::size_t height_;
  std::size_t width_;
  Region region_;
  std::vector<double> xs_;
  std::vector<double> ys_;
};

CoordinateGrid make_grid(std::size_t height, std::size_t width, Region region = Region::unit());

// Unit-region grid of size (factor*(H-1)+1) x (factor*(W-1)+1); the base grid
// appears at every index that is a multiple of factor.
CoordinateGrid nested_dense_grid(std::size_t base_height, std::size_t base_width,
                                 std::size_t factor);

}  // namespace polyinr
