#include <doctest.h>

#include <cmath>

#include "semiconvex/errors.hpp"
#include "semiconvex/prox.hpp"
#include "semiconvex/random.hpp"
#include "semiconvex/supconv.hpp"
#include "test_fields.hpp"

using namespace semiconvex;
using namespace testfields;

namespace {

VectorXd v2(double a, double b) { return VectorXd{{a, b}}; }

// -1/2 x^2 on (-1, 1) x (-1, 1)
ScalarField neg_half_square() {
  Certificates c;
  c.sup_norm = 0.5;
  c.semiconcavity = 0.0;
  c.fiber_convexity = 0.0;
  return ScalarField("neg-half-square", 1, 1, Box::cube(2, 1.0), [](const VectorXd& z) { return -0.5 * z(0) * z(0); },
                     [](const VectorXd& z) -> VectorXd { return VectorXd{{-z(0), 0.0}}; }, c);
}

ScalarField constant_field(double value) {
  Certificates c;
  c.sup_norm = std::abs(value);
  c.semiconcavity = 0.0;
  c.fiber_convexity = 0.0;
  return ScalarField("constant", 1, 1, Box::cube(2, 1.0), [value](const VectorXd&) { return value; },
                     [](const VectorXd&) -> VectorXd { return VectorXd::Zero(2); }, c);
}

// -1/2 (x^2 + y^2) with kappa = 1
ScalarField neg_half_ball() {
  Certificates c;
  c.sup_norm = 1.0;
  c.semiconcavity = 1.0;
  return ScalarField("neg-half-ball", 1, 1, Box::cube(2, 1.0), [](const VectorXd& z) { return -0.5 * z.squaredNorm(); },
                     [](const VectorXd& z) -> VectorXd { return -z; }, c);
}

struct SeededQuadratic {
  ScalarField f;
  MatrixXd a;
  Index n, m;
};

// Fiber-convex, semiconcave block quadratic with an exact sup-norm bound on [-2, 2]^{n+m}.
SeededQuadratic seeded_quadratic(Rng& rng, Index n, Index m) {
  const MatrixXd g = rng.normal_matrix(n + m, n + m);
  MatrixXd a = 0.5 * (g + g.transpose());
  const MatrixXd r = rng.normal_matrix(m, m);
  a.bottomRightCorner(m, m) = r.transpose() * r + MatrixXd::Identity(m, m);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
  Certificates c;
  c.semiconcavity = std::max(0.0, eig.eigenvalues().maxCoeff());
  c.fiber_convexity = Eigen::SelfAdjointEigenSolver<MatrixXd>(a.bottomRightCorner(m, m)).eigenvalues()(0);
  c.sup_norm = 0.5 * eig.eigenvalues().cwiseAbs().maxCoeff() * 4.0 * static_cast<double>(n + m);
  return {quadratic(a, VectorXd::Zero(n + m), n, m, c, 2.0), a, n, m};
}

// maximiser of z -> f(z, y) - |z - x|^2 / (2 eps) for quadratic f, unconstrained
double quadratic_supconv(const SeededQuadratic& q, const VectorXd& z, double eps) {
  const MatrixXd b = q.a.topLeftCorner(q.n, q.n), c = q.a.topRightCorner(q.n, q.m);
  const VectorXd x = z.head(q.n), y = z.tail(q.m);
  const MatrixXd lhs = MatrixXd::Identity(q.n, q.n) / eps - b;
  const VectorXd zs = lhs.ldlt().solve(x / eps + c * y);
  VectorXd w(q.n + q.m);
  w << zs, y;
  return 0.5 * w.dot(q.a * w) - 0.5 * (zs - x).squaredNorm() / eps;
}

}  // namespace

TEST_CASE("sup-convolution closed forms") {
  const SupConvField sc = partial_sup_convolve(neg_half_square(), 1.0);
  CHECK(sc(v2(0.5, 0.3)) == doctest::Approx(-0.0625).epsilon(1e-12));
  for (double eps : {1.0, 0.5, 0.1}) {
    const SupConvField s = partial_sup_convolve(neg_half_square(), eps);
    for (double x : {-0.9, -0.2, 0.0, 0.7}) {
      const SupConvField::Evaluation e = s.evaluate(v2(x, 0.1));
      CHECK(e.value == doctest::Approx(-x * x / (2.0 * (1.0 + eps))).epsilon(1e-12));
      CHECK(e.gradient(0) == doctest::Approx(-x / (1.0 + eps)).epsilon(1e-9));
      CHECK(e.localized);
    }
  }
  const SupConvField flat = partial_sup_convolve(constant_field(0.25), 0.3);
  CHECK(flat(v2(0.4, -0.6)) == 0.25);
  CHECK(flat.evaluate(v2(0.4, -0.6)).shift.norm() == 0.0);

  CHECK(localization_radius(0.01, 0.5) == doctest::Approx(0.141421356237).epsilon(1e-12));
  CHECK(partial_sup_convolve(neg_half_square(), 0.01).delta() == 2.0 * std::sqrt(0.01 * 0.5));
}

TEST_CASE("sup-convolution domain and certificate errors") {
  const SupConvField sc = partial_sup_convolve(neg_half_square(), 1.0);
  CHECK_THROWS_AS(sc(v2(1.5, 0.0)), DomainError);
  CHECK_THROWS_AS(sc.localized_base(), DomainError);
  CHECK_FALSE(sc.in_localized_base(VectorXd::Zero(1)));
  const SupConvField narrow = partial_sup_convolve(neg_half_square(), 0.01);
  CHECK(narrow.in_localized_base(VectorXd::Constant(1, 0.8)));
  CHECK_FALSE(narrow.in_localized_base(VectorXd::Constant(1, 0.9)));
  CHECK(narrow.localized_base().upper()(0) == doctest::Approx(1.0 - narrow.delta()));

  CHECK_THROWS_AS(partial_sup_convolve(neg_half_square().with_certificates({}), 0.5), CertificateError);
  CHECK_THROWS_AS(partial_sup_convolve(neg_half_square(), 0.0), PreconditionError);
  CHECK_THROWS_AS(sc(VectorXd::Zero(3)), DimensionError);
}

TEST_CASE("sup-convolution certificates") {
  const Certificates c = partial_sup_convolve(neg_half_square(), 0.5).field().certificates();
  CHECK(*c.semiconvexity == 2.0);
  CHECK(*c.fiber_convexity == 0.0);
  CHECK(*c.fiber_semiconcavity == 0.0);
  CHECK(*c.sup_norm == 0.5);
}

TEST_CASE("multi-start finds a remote peak") {
  Certificates c;
  c.sup_norm = 1.0;
  const ScalarField bump("bump", 1, 1, Box::cube(2, 2.0),
                         [](const VectorXd& z) { return std::exp(-(z(0) - 1.0) * (z(0) - 1.0) / 0.02); }, {}, c);
  const SupConvField sc = partial_sup_convolve(bump, 1.0);
  double oracle = -1e300;
  for (int k = 0; k <= 400000; ++k) {
    const double z = -2.0 + 4.0 * k / 400000.0;
    oracle = std::max(oracle, bump(v2(z, 0.0)) - 0.5 * z * z);
  }
  CHECK(sc(v2(0.0, 0.0)) == doctest::Approx(oracle).epsilon(1e-7));
  CHECK(sc(v2(0.0, 0.0)) > 0.4);
}

TEST_CASE("quadratic sources match the linear-algebra oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 1 + trial % 2, m = 1 + (trial / 2) % 2;
    const SeededQuadratic q = seeded_quadratic(rng, n, m);
    const double eps = 0.5 / (1.0 + *q.f.certificates().semiconcavity);
    const SupConvField sc = partial_sup_convolve(q.f, eps);
    for (int k = 0; k < 10; ++k) {
      const VectorXd z = rng.uniform_vector(VectorXd::Constant(n + m, -0.3), VectorXd::Constant(n + m, 0.3));
      CHECK(sc(z) == doctest::Approx(quadratic_supconv(q, z, eps)).epsilon(1e-10));
    }
  }
}

TEST_CASE("property sweeps") {
  std::vector<VectorXd> grid;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) grid.push_back(v2(-0.9 + 0.2 * i, -0.9 + 0.2 * j));
  const SupConvPropertyReport r = verify_supconv_properties(neg_half_square(), {1.0, 0.5, 0.1}, grid);
  CHECK(r.passed());
  CHECK(r.ordering_violation <= 1e-12);
  CHECK(r.convexity_checked);
  CHECK(r.distance_to_source[2] < r.distance_to_source[1]);
  CHECK(r.max_shift_over_delta < 1.0);

  const SupConvPropertyReport flat = verify_supconv_properties(constant_field(-0.4), {0.8, 0.2}, grid);
  CHECK(flat.passed());
  CHECK(flat.ordering_violation == 0.0);
  CHECK(flat.distance_to_source[0] == 0.0);

  Rng rng(22);
  const SeededQuadratic q = seeded_quadratic(rng, 2, 1);
  const double kappa = *q.f.certificates().semiconcavity;
  std::vector<VectorXd> qgrid;
  for (int k = 0; k < 30; ++k)
    qgrid.push_back(rng.uniform_vector(VectorXd::Constant(3, -0.5), VectorXd::Constant(3, 0.5)));
  SupConvPropertyOptions opt;
  opt.tol = 1e-6;
  const SupConvPropertyReport qr =
      verify_supconv_properties(q.f, {0.5 / (1 + kappa), 0.1 / (1 + kappa), 0.02 / (1 + kappa)}, qgrid, opt);
  CHECK(qr.passed());

  CHECK_THROWS_AS(verify_supconv_properties(neg_half_square(), {0.1, 0.5}, grid), PreconditionError);
}

TEST_CASE("f_epsilon construction") {
  Certificates zc;
  zc.sup_norm = 0.0;
  zc.semiconcavity = 0.0;
  zc.fiber_convexity = 0.0;
  const ScalarField zero = zero_field(1, 2).with_certificates(zc);
  const ScalarField fe = build_f_epsilon(zero, 0.2);
  const VectorXd z{{0.3, 0.5, -1.0}};
  CHECK(fe(z) == doctest::Approx(0.1 * 1.25).epsilon(1e-14));
  CHECK((fe.gradient(z) - VectorXd{{0.0, 0.1, -0.2}}).norm() <= 1e-14);

  Certificates c;
  c.sup_norm = 1.0;
  c.semiconcavity = 1.0;
  c.fiber_convexity = 0.0;
  const ScalarField f = neg_half_square().with_certificates(c);
  const Certificates out = build_f_epsilon(f, 0.5).certificates();
  CHECK(*out.semiconvexity == 2.0);
  CHECK(*out.fiber_convexity == 0.5);
  CHECK(*out.fiber_semiconcavity == 1.5);
  CHECK_THROWS_AS(build_f_epsilon(f, 2.0), PreconditionError);
  CHECK_THROWS_AS(build_f_epsilon(f, 1.0), PreconditionError);
  CHECK_THROWS_AS(build_f_epsilon(neg_half_ball(), 0.5), CertificateError);
  CHECK_THROWS_AS(build_f_epsilon(f.with_certificates({}), 0.5), CertificateError);
}

TEST_CASE("property: f_epsilon certificates pass sampled validation") {
  Rng rng(23);
  for (int trial = 0; trial < 3; ++trial) {
    const SeededQuadratic q = seeded_quadratic(rng, 2, 1);
    const double eps = 0.25 / (1.0 + *q.f.certificates().semiconcavity);
    const ScalarField fe = build_f_epsilon(q.f, eps);
    const ScalarField inner("inner", 2, 1, Box::cube(3, 1.0), [fe](const VectorXd& z) { return fe(z); },
                            [fe](const VectorXd& z) -> VectorXd { return fe.gradient(z); }, fe.certificates());
    const CertificateCheckReport r = validate_certificates(inner, {100, 24, 0.1, 1e-7});
    CHECK(r.passed);
  }
}

TEST_CASE("fiber semiconcavity checks") {
  const SupConvField sc = partial_sup_convolve(neg_half_ball(), 0.5);
  const FiberSemiconcavityReport pass = verify_fiber_semiconcavity(sc.field(), 1.0);
  CHECK(pass.passed);
  CHECK(pass.samples == 1000);
  CHECK(pass.worst <= 1e-8);

  Certificates c;
  c.sup_norm = 2.0;
  const ScalarField bowl = quadratic(MatrixXd{{0.0, 0.0}, {0.0, 2.0}}, VectorXd::Zero(2), 1, 1, c, 1.0);
  const FiberSemiconcavityReport boundary = verify_fiber_semiconcavity(bowl, 2.0);
  CHECK(boundary.passed);
  CHECK(std::abs(boundary.worst) <= 1e-14);

  const FiberSemiconcavityReport under = verify_fiber_semiconcavity(bowl, 1.0);
  CHECK_FALSE(under.passed);
  REQUIRE(under.witness.size() == 2);
  const double s2 = under.witness_direction.squaredNorm();
  CHECK(under.worst == doctest::Approx(s2).epsilon(1e-9));
}

TEST_CASE("lattice memoisation") {
  const SupConvField sc = partial_sup_convolve(neg_half_square(), 0.5);
  const double first = sc(v2(0.25, 0.5));
  CHECK(sc.cache_size() == 1);
  CHECK(sc(v2(0.25, 0.5)) == first);
  CHECK(sc.cache_size() == 1);
  sc(v2(0.1, 0.5));
  CHECK(sc.cache_size() == 1);
  SupConvOptions off;
  off.memoize = false;
  const SupConvField plain = partial_sup_convolve(neg_half_square(), 0.5, off);
  CHECK(plain(v2(0.25, 0.5)) == first);
  CHECK(plain.cache_size() == 0);
}
