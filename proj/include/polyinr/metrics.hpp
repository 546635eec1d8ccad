#pragma once

#include "polyinr/generator.hpp"

namespace polyinr {

// Both metrics read images through the export mapping u = clamp((v + 1) / 2,
// 0, 1) without 8-bit quantization, and accumulate in double.

inline constexpr double kPsnrCap = 99.0;

// 10 log10(1 / MSE) over all channels, capped at 99 dB.
template <typename T>
double psnr(const ImageBuffer<T>& a, const ImageBuffer<T>& b);

// Global single-window SSIM on the channel-mean grayscale image with
// C1 = 1e-4, C2 = 9e-4 and population (1/N) statistics.
template <typename T>
double ssim(const ImageBuffer<T>& a, const ImageBuffer<T>& b);

}  // namespace polyinr
