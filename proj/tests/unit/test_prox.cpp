#include <doctest.h>

#include <cmath>

#include "semiconvex/errors.hpp"
#include "semiconvex/prox.hpp"
#include "semiconvex/random.hpp"
#include "test_fields.hpp"

using namespace semiconvex;
using namespace testfields;

TEST_CASE("full resolvent closed forms") {
  const VectorXd zeta{{0.7, -1.3, 2.0}};
  ResolventSolveReport r = resolvent_full(zero_field(2, 1), zeta);
  CHECK(r.converged);
  CHECK((r.point - zeta).norm() <= 1e-9);

  r = resolvent_full(quadratic(MatrixXd::Identity(3, 3), VectorXd::Zero(3), 2, 1, convex_sigma(1.0)), zeta);
  CHECK((r.point - zeta / 2).norm() <= 1e-9);
  CHECK(r.residual <= 1e-9);

  const VectorXd b{{0.5, -2.0, 1.0}};
  r = resolvent_full(quadratic(MatrixXd::Zero(3, 3), b, 2, 1, convex_sigma(0.0)), zeta);
  CHECK((r.point - (zeta - b)).norm() <= 1e-9);
}

TEST_CASE("resolvent without analytic gradient uses finite differences") {
  Certificates c = convex_sigma(0.0);
  const ScalarField f("soft", 2, 0, Box::cube(2, 5.0),
                      [](const VectorXd& z) { return std::log(std::cosh(z(0))) + 0.25 * z(1) * z(1); }, {}, c);
  const VectorXd zeta{{1.5, -0.8}};
  const ResolventSolveReport r = resolvent_full(f, zeta);
  CHECK(r.converged);
  // oracle: p + tanh(p) = 1.5 solved by bisection, and p + p/2 = -0.8
  double lo = 0.0, hi = 1.5;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (mid + std::tanh(mid) > 1.5 ? hi : lo) = mid;
  }
  CHECK(r.point(0) == doctest::Approx(lo).epsilon(1e-8));
  CHECK(r.point(1) == doctest::Approx(-0.8 / 1.5).epsilon(1e-8));
}

TEST_CASE("base resolvent of |x| is soft thresholding") {
  Certificates c;
  c.semiconvexity = 0.0;
  const ScalarField g("abs", 1, 0, Box::cube(1, 5.0), [](const VectorXd& z) { return std::abs(z(0)); },
                      [](const VectorXd& z) -> VectorXd {
                        return VectorXd::Constant(1, z(0) > 0 ? 1.0 : (z(0) < 0 ? -1.0 : 0.0));
                      },
                      c);
  for (double u : {-2.5, -1.0, -0.4, 0.0, 0.3, 0.99, 2.0, 3.7}) {
    const double oracle = (u > 0 ? 1.0 : -1.0) * std::max(std::abs(u) - 1.0, 0.0);
    const ResolventSolveReport r = resolvent_base(g, VectorXd::Constant(1, u));
    CHECK(r.converged);
    CHECK(std::abs(r.point(0) - oracle) <= 1e-9);
  }
}

TEST_CASE("base resolvent of x^2/4 and of zero") {
  Certificates c;
  c.semiconvexity = 0.0;
  const ScalarField g("quarter", 1, 0, Box::cube(1, 5.0), [](const VectorXd& z) { return 0.25 * z(0) * z(0); }, {},
                      c);
  CHECK(resolvent_base(g, VectorXd::Constant(1, 3.0)).point(0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(resolvent_base(g, VectorXd::Constant(1, -0.75)).point(0) == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(resolvent_base(zero_field(1, 0), VectorXd::Constant(1, 0.3)).point(0) == doctest::Approx(0.3));
}

TEST_CASE("resolvent errors") {
  ScalarField no_cert("nocert", 1, 0, Box::cube(1, 1.0), [](const VectorXd& z) { return z(0) * z(0); });
  CHECK_THROWS_AS(resolvent_full(no_cert, VectorXd::Zero(1)), CertificateError);
  CHECK_THROWS_AS(resolvent_base(sigma_family(1.0), VectorXd::Zero(2)), DimensionError);
  Certificates lie;
  lie.semiconvexity = 0.0;
  const ScalarField concave("concave", 1, 0, Box::cube(1, 1.0), [](const VectorXd& z) { return -z(0) * z(0); },
                            [](const VectorXd& z) -> VectorXd { return -2.0 * z; }, lie);
  CHECK_THROWS_AS(resolvent_full(concave, VectorXd::Constant(1, 1.0), {1e-9, 500}), ConvergenceError);
}

TEST_CASE("contraction constant") {
  CHECK(contraction_mu(1.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(contraction_mu(3.0) == doctest::Approx(1.0 / (1.0 + 3.0 / std::sqrt(10.0))).epsilon(1e-15));
  CHECK(contraction_mu(3.0) == doctest::Approx(0.51317).epsilon(1e-5));
  CHECK(contraction_mu(1e-6) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(contraction_mu(1e-6) < 1.0);
  CHECK_THROWS_AS(contraction_mu(0.0), PreconditionError);
  CHECK_THROWS_AS(contraction_mu(-1.0), PreconditionError);
}

TEST_CASE("property: mu < 1 and nonincreasing over sigma in [1e-3, 1e3]") {
  double previous = 1.0;
  for (int k = 0; k <= 600; ++k) {
    const double sigma = std::pow(10.0, -3.0 + 0.01 * k);
    const double mu = contraction_mu(sigma);
    CHECK(mu < 1.0);
    CHECK(mu <= previous);
    previous = mu;
  }
}

TEST_CASE("nonexpansive ratios against the closed-form inverse") {
  const ScalarField f = sigma_family(1.0);
  NonexpansiveOptions opt;
  opt.pairs = 200;
  const NonexpansiveReport report = verify_nonexpansive(f, opt);
  CHECK(report.passed());
  // oracle: H = (I + A)^{-1} = [[3,1],[1,2]] / 5; fiber row norm sqrt(5)/5
  CHECK(report.fiber_ratio_max <= std::sqrt(5.0) / 5.0 + 1e-9);
  CHECK(report.fiber_ratio_max <= 1.0 / std::sqrt(2.0));
  CHECK(report.full_ratio_max <= 1.0 + 1e-9);

  opt.test_fiber = false;
  const NonexpansiveReport ident = verify_nonexpansive(zero_field(1, 1), opt);
  CHECK(ident.full_ratio_max == doctest::Approx(1.0).epsilon(1e-9));

  const NonexpansiveReport half =
      verify_nonexpansive(quadratic(MatrixXd::Identity(2, 2), VectorXd::Zero(2), 1, 1, convex_sigma(1.0)), opt);
  CHECK(half.full_ratio_max == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("resolvent residual invariant: p + grad f(p) = zeta") {
  Rng rng(4);
  const ScalarField f = sigma_family(0.5);
  for (int k = 0; k < 50; ++k) {
    const VectorXd zeta = rng.uniform_vector(f.domain().lower(), f.domain().upper());
    const ResolventSolveReport r = resolvent_full(f, zeta);
    CHECK(r.converged);
    CHECK((r.point + f.gradient(r.point) - zeta).norm() <= 1e-9);
  }
}

TEST_CASE("monotonicity inequality and certificate validation") {
  const ScalarField f = sigma_family(2.0);
  const MonotonicityReport mono = verify_monotonicity(f, {500, 8, 0.05, 1e-6});
  CHECK(mono.passed);
  const CertificateCheckReport cert = validate_certificates(f, {300, 9, 0.1, 1e-8});
  CHECK(cert.passed);

  // overstated sigma is caught by both checks
  const ScalarField lie = sigma_family(2.0).with_certificates(convex_sigma(3.0));
  CHECK_FALSE(verify_monotonicity(lie, {500, 8, 0.05, 1e-6}).passed);
  CHECK_FALSE(validate_certificates(lie, {300, 9, 0.1, 1e-8}).passed);
}
