#include "polyinr/grid.hpp"

#include <cmath>
#include <string>

namespace polyinr {

namespace {

std::vector<double> axis(std::size_t count, double lo, double hi) {
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = lo;
    return v;
  }
  const double steps = static_cast<double>(count - 1);
  const double span = hi - lo;
  for (std::size_t i = 0; i < count; ++i) {
    v[i] = (lo * steps + static_cast<double>(i) * span) / steps;
  }
  return v;
}

}  // namespace

CoordinateGrid::CoordinateGrid(std::size_t height, std::size_t width, Region region)
    : height_(height), width_(width), region_(region) {
  if (height == 0 || width == 0) {
    throw ArgumentError("grid dimensions must be positive, got " + std::to_string(height) + "x" +
                        std::to_string(width));
  }
  if (!(region.x_min <= region.x_max) || !(region.y_min <= region.y_max) ||
      !std::isfinite(region.x_min) || !std::isfinite(region.x_max) ||
      !std::isfinite(region.y_min) || !std::isfinite(region.y_max)) {
    throw ArgumentError("grid region bounds must be finite and ordered");
  }
  xs_ = axis(width, region.x_min, region.x_max);
  ys_ = axis(height, region.y_min, region.y_max);
}

template <typename T>
Tensor<T> CoordinateGrid::homogeneous() const {
  const std::size_t n = pixel_count();
  Tensor<T> out({3, n});
  for (std::size_t r = 0; r < height_; ++r) {
    for (std::size_t c = 0; c < width_; ++c) {
      const std::size_t p = pixel_index(r, c);
      out(0, p) = static_cast<T>(xs_[c]);
      out(1, p) = static_cast<T>(ys_[r]);
      out(2, p) = T(1);
    }
  }
  return out;
}

template <typename T>
Tensor<T> CoordinateGrid::pixel_rows() const {
  const std::size_t n = pixel_count();
  Tensor<T> out({n, 3});
  for (std::size_t p = 0; p < n; ++p) {
    const auto [r, c] = row_col(p);
    out(p, 0) = static_cast<T>(xs_[c]);
    out(p, 1) = static_cast<T>(ys_[r]);
    out(p, 2) = T(1);
  }
  return out;
}

template <typename T>
Tensor<T> CoordinateGrid::pixel_rows(const std::vector<std::size_t>& pixels) const {
  Tensor<T> out({pixels.size(), 3});
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (pixels[i] >= pixel_count()) {
      throw ArgumentError("pixel index " + std::to_string(pixels[i]) + " outside grid of " +
                          std::to_string(pixel_count()));
    }
    const auto [r, c] = row_col(pixels[i]);
    out(i, 0) = static_cast<T>(xs_[c]);
    out(i, 1) = static_cast<T>(ys_[r]);
    out(i, 2) = T(1);
  }
  return out;
}

template Tensor<float> CoordinateGrid::homogeneous<float>() const;
template Tensor<double> CoordinateGrid::homogeneous<double>() const;
template Tensor<float> CoordinateGrid::pixel_rows<float>() const;
template Tensor<double> CoordinateGrid::pixel_rows<double>() const;
template Tensor<float> CoordinateGrid::pixel_rows<float>(const std::vector<std::size_t>&) const;
template Tensor<double> CoordinateGrid::pixel_rows<double>(const std::vector<std::size_t>&) const;

CoordinateGrid make_grid(std::size_t height, std::size_t width, Region region) {
  return CoordinateGrid(height, width, region);
}

CoordinateGrid nested_dense_grid(std::size_t base_height, std::size_t base_width,
                                 std::size_t factor) {
  if (factor < 1) throw ArgumentError("upsampling factor must be >= 1");
  if (base_height < 2 || base_width < 2) {
    throw ArgumentError("nested dense grid needs base dimensions >= 2");
  }
  return CoordinateGrid(factor * (base_height - 1) + 1, factor * (base_width - 1) + 1);
}

}  // namespace polyinr
