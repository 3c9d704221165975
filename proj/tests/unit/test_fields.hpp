#pragma once

// Small closed-form fields shared by the unit suites.

#include <cmath>

#include "semiconvex/field.hpp"

namespace testfields {

using namespace semiconvex;

// 1/2 z^t A z + b.z on base(n) x fiber(m) with explicit certificates.
inline ScalarField quadratic(const MatrixXd& a, const VectorXd& b, Index n, Index m, Certificates cert,
                             double half_width = 5.0) {
  return ScalarField(
      "quadratic", n, m, Box::cube(n + m, half_width),
      [a, b](const VectorXd& z) { return 0.5 * z.dot(a * z) + b.dot(z); },
      [a, b](const VectorXd& z) -> VectorXd { return a * z + b; }, cert);
}

inline Certificates convex_sigma(double sigma) {
  Certificates c;
  c.semiconvexity = 0.0;
  c.fiber_convexity = sigma;
  return c;
}

// 1/2 (x - y)^2 + sigma/2 y^2
inline ScalarField sigma_family(double sigma, double half_width = 5.0) {
  MatrixXd a(2, 2);
  a << 1.0, -1.0, -1.0, 1.0 + sigma;
  return quadratic(a, VectorXd::Zero(2), 1, 1, convex_sigma(sigma), half_width);
}

inline ScalarField zero_field(Index n, Index m) {
  Certificates c = convex_sigma(0.0);
  c.fiber_convexity.reset();
  c.semiconcavity = 0.0;
  c.sup_norm = 0.0;
  return ScalarField("zero", n, m, Box::cube(n + m, 5.0), [](const VectorXd&) { return 0.0; },
                     [](const VectorXd& z) -> VectorXd { return VectorXd::Zero(z.size()); }, c);
}

}  // namespace testfields
