#pragma once

#include <cstddef>
#include <span>

#include "polyinr/tensor.hpp"

// Raw dense kernels shared by the tape's forward and backward passes.
//
// Every matrix product reduces over the inner dimension in a fixed sequential
// order per output row, independently of how many rows are present. Rendering
// a subset of pixels therefore reproduces the full render bit for bit.
namespace polyinr::kernels {

// out(m x n) = a(m x k) * b(k x n); out is overwritten.
template <typename T>
void matmul(std::span<const T> a, std::span<const T> b, std::span<T> out, std::size_t m,
            std::size_t k, std::size_t n);

// out(k x n) += a(m x k)^T * c(m x n); reduction runs over m in index order.
template <typename T>
void matmul_tn_accumulate(std::span<const T> a, std::span<const T> c, std::span<T> out,
                          std::size_t m, std::size_t k, std::size_t n);

// out(cols x rows) = transpose of in(rows x cols).
template <typename T>
void transpose(std::span<const T> in, std::span<T> out, std::size_t rows, std::size_t cols);

template <typename T>
T softplus(T x);

template <typename T>
T sigmoid(T x);

}  // namespace polyinr::kernels
