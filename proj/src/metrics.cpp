#include "polyinr/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace polyinr {

namespace {

template <typename T>
void check_same(const ImageBuffer<T>& a, const ImageBuffer<T>& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ArgumentError("metric inputs differ in size: " + std::to_string(a.height()) + "x" +
                        std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                        std::to_string(b.width()));
  }
  if (a.pixel_count() == 0) throw ArgumentError("metric inputs are empty");
}

inline double unit(double v) { return std::clamp((v + 1.0) / 2.0, 0.0, 1.0); }

}  // namespace

template <typename T>
double psnr(const ImageBuffer<T>& a, const ImageBuffer<T>& b) {
  check_same(a, b);
  const auto pa = a.pixels().data();
  const auto pb = b.pixels().data();
  double acc = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = unit(pa[i]) - unit(pb[i]);
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(pa.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

template <typename T>
double ssim(const ImageBuffer<T>& a, const ImageBuffer<T>& b) {
  check_same(a, b);
  constexpr double c1 = 1e-4;
  constexpr double c2 = 9e-4;
  const std::size_t n = a.pixel_count();
  auto gray = [](const ImageBuffer<T>& img, std::size_t p) {
    const auto& px = img.pixels();
    return (unit(px(p, 0)) + unit(px(p, 1)) + unit(px(p, 2))) / 3.0;
  };
  double ma = 0.0, mb = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    ma += gray(a, p);
    mb += gray(b, p);
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double va = 0.0, vb = 0.0, cov = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double da = gray(a, p) - ma;
    const double db = gray(b, p) - mb;
    va += da * da;
    vb += db * db;
    cov += da * db;
  }
  va /= static_cast<double>(n);
  vb /= static_cast<double>(n);
  cov /= static_cast<double>(n);
  return ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

template double psnr(const ImageBuffer<float>&, const ImageBuffer<float>&);
template double psnr(const ImageBuffer<double>&, const ImageBuffer<double>&);
template double ssim(const ImageBuffer<float>&, const ImageBuffer<float>&);
template double ssim(const ImageBuffer<double>&, const ImageBuffer<double>&);

}  // namespace polyinr
