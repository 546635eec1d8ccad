#include "polyinr/gradcheck.hpp"

#include <cmath>
#include <vector>

namespace polyinr {

GradcheckResult gradcheck(const ScalarFn& fn, const Tensor<double>& point, double epsilon) {
  if (!(epsilon > 0.0)) throw ArgumentError("gradcheck epsilon must be positive");

  Tape<double> tape;
  const Var x = tape.input(point, true, "x");
  const Var out = fn(tape, x);
  const double f0 = tape.scalar(out);
  if (!std::isfinite(f0)) throw NumericError("gradcheck: function value is not finite");
  if (tape.min_rectifier_margin() <= 10.0 * epsilon) {
    throw PreconditionError("gradcheck: a rectifier pre-activation lies within 10*epsilon of 0");
  }
  tape.backward(out);
  const Tensor<double> analytic = tape.grad(x);

  GradcheckResult result;
  std::vector<Tensor<double>> probe{point};
  for (std::size_t i = 0; i < point.size(); ++i) {
    probe[0][i] = point[i] + epsilon;
    const double fp = tape.replay(probe, out)[0];
    probe[0][i] = point[i] - epsilon;
    const double fm = tape.replay(probe, out)[0];
    probe[0][i] = point[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("gradcheck: function value is not finite at coordinate " +
                         std::to_string(i));
    }
    const double numeric = (fp - fm) / (2.0 * epsilon);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace polyinr
