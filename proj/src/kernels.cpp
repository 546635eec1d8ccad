#include "polyinr/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace polyinr::kernels {

template <typename T>
void matmul(std::span<const T> a, std::span<const T> b, std::span<T> out, std::size_t m,
            std::size_t k, std::size_t n) {
  std::fill(out.begin(), out.end(), T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* __restrict o = out.data() + i * n;
    const T* ai = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T s = ai[p];
      const T* __restrict bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += s * bp[j];
    }
  }
}

template <typename T>
void matmul_tn_accumulate(std::span<const T> a, std::span<const T> c, std::span<T> out,
                          std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a.data() + i * k;
    const T* __restrict ci = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T s = ai[p];
      T* __restrict o = out.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += s * ci[j];
    }
  }
}

template <typename T>
void transpose(std::span<const T> in, std::span<T> out, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = in[r * cols + c];
  }
}

template <typename T>
T softplus(T x) {
  // log(1 + e^x) without overflow for large |x|.
  return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

#define POLYINR_INSTANTIATE(T)                                                                 \
  template void matmul<T>(std::span<const T>, std::span<const T>, std::span<T>, std::size_t,   \
                          std::size_t, std::size_t);                                           \
  template void matmul_tn_accumulate<T>(std::span<const T>, std::span<const T>, std::span<T>,  \
                                        std::size_t, std::size_t, std::size_t);                \
  template void transpose<T>(std::span<const T>, std::span<T>, std::size_t, std::size_t);      \
  template T softplus<T>(T);                                                                   \
  template T sigmoid<T>(T);

POLYINR_INSTANTIATE(float)
POLYINR_INSTANTIATE(double)
#undef POLYINR_INSTANTIATE

}  // namespace polyinr::kernels
