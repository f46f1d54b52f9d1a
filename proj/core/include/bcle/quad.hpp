#pragma once

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace bcle {

// Gauss-Kronrod 61 with bisection until the local error estimate drops below
// an absolute tolerance, or to roundoff level of |f|. Boost's adaptive driver
// only has a relative criterion, which never terminates on integrals that
// are nearly zero.
template <class F>
auto integrate_abs(F&& f, double a, double b, double absTol, double* err, int depth = 30) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double e = 0, L1 = 0;
  auto v = GK::integrate(f, a, b, 0, 0.0, &e, &L1);
  if (e <= std::max(absTol, 1e-14 * L1) || depth == 0) {
    *err += e;
    return v;
  }
  const double m = 0.5 * (a + b);
  return integrate_abs(f, a, m, absTol / 2, err, depth - 1) + integrate_abs(f, m, b, absTol / 2, err, depth - 1);
}

}  // namespace bcle
