#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "polyinr/generator.hpp"

namespace polyinr::testing {

template <typename T>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng, double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(normal(rng));
  return t;
}

// Affine parameters with every entry ~ N(0, stddev); unlike affine_from_w at
// initialization, the x and y coefficients are far from zero.
template <typename T>
AffineParams<T> random_affine(const GeneratorConfig& cfg, std::mt19937_64& rng,
                              double stddev = 1.0) {
  AffineParams<T> a;
  for (std::size_t i = 0; i < cfg.levels; ++i) {
    a.levels.push_back(random_tensor<T>({cfg.feature_dim, 3}, rng, stddev));
  }
  return a;
}

inline GeneratorConfig small_config(std::size_t levels = 3, std::size_t n = 8) {
  GeneratorConfig c;
  c.z_dim = 4;
  c.w_dim = 8;
  c.levels = levels;
  c.feature_dim = n;
  return c;
}

// Random small config for property sweeps.
inline GeneratorConfig random_config(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> lv(1, 5);
  std::uniform_int_distribution<std::size_t> dim(2, 24);
  GeneratorConfig c;
  c.z_dim = dim(rng);
  c.w_dim = dim(rng);
  c.levels = lv(rng);
  c.feature_dim = dim(rng);
  return c;
}

}  // namespace polyinr::testing

namespace polyinr::testing {

// k-th forward differences of a sampled sequence (length shrinks by k).
inline std::vector<double> forward_differences(std::vector<double> v, std::size_t order) {
  for (std::size_t k = 0; k < order && !v.empty(); ++k) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) v[i] = v[i + 1] - v[i];
    v.pop_back();
  }
  return v;
}

}  // namespace polyinr::testing
