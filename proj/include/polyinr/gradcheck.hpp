#pragma once

#include <functional>

#include "polyinr/tape.hpp"

namespace polyinr {

// Builds a scalar on the tape from the declared input x.
using ScalarFn = std::function<Var(Tape<double>&, Var x)>;

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

// Compares reverse-mode gradients of fn at `point` against central finite
// differences. Relative error per coordinate is
// |analytic - numeric| / max(1, |analytic|).
//
// Throws PreconditionError when any leaky-rectifier pre-activation lies within
// 10 * epsilon of the kink, and NumericError when fn is not finite.
GradcheckResult gradcheck(const ScalarFn& fn, const Tensor<double>& point, double epsilon = 1e-5);

}  // namespace polyinr
