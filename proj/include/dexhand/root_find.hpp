#pragma once

#include <functional>

namespace dexhand {

struct BrentResult {
  double root = 0.0;
  int iterations = 0;
};

/// Brent's method: inverse-quadratic / secant steps with a bisection
/// fallback, never evaluating outside [lo, hi]. Requires a sign change
/// (or an exact zero at an endpoint); throws std::invalid_argument
/// otherwise. Convergence is guaranteed for continuous f.
BrentResult brent_root(const std::function<double(double)>& f, double lo,
                       double hi, double tol = 1e-12);

}  // namespace dexhand
