#include <doctest.h>

#include <algorithm>

#include "semiconvex/random.hpp"
#include "semiconvex/subequations.hpp"

using namespace semiconvex;

namespace {

Jet2d hessian_jet(const MatrixXd& a) { return Jet2d(0.0, VectorXd::Zero(a.rows()), SymMatrixd(a)); }

MatrixXd diag2(double a, double b) { return VectorXd{{a, b}}.asDiagonal(); }

MatrixXd block(double b, double c, double d) {
  MatrixXd a(2, 2);
  a << b, c, c, d;
  return a;
}

// Independent oracle: k-th smallest eigenvalue by sorting the diagonal of a
// diagonal matrix.
double kth_diagonal(const MatrixXd& a, int k) {
  std::vector<double> d(a.rows());
  for (Index i = 0; i < a.rows(); ++i) d[i] = a(i, i);
  std::sort(d.begin(), d.end());
  return d[k - 1];
}

}  // namespace

TEST_CASE("catalog membership examples") {
  CHECK(catalog("P", 2).contains(hessian_jet(diag2(1, 0))));
  const Subequation eig2 = catalog("eig-2", 2);
  CHECK(kth_diagonal(diag2(-1, 5), 2) >= 0.0);
  CHECK(eig2.contains(hessian_jet(diag2(-1, 5))));
  CHECK(kth_diagonal(diag2(-1, -2), 2) < 0.0);
  CHECK_FALSE(eig2.contains(hessian_jet(diag2(-1, -2))));
  CHECK(catalog("trace", 2, {0.0}).contains(hessian_jet(diag2(3, -2))));
  CHECK_FALSE(catalog("shifted-min", 2, {0.5}).contains(hessian_jet(diag2(-0.6, 3))));
  CHECK(catalog("shifted-min", 2, {0.5}).contains(hessian_jet(diag2(-0.4, 3))));
}

TEST_CASE("catalog rejects unknown names and bad parameters") {
  CHECK_THROWS_AS(catalog("laplace", 2), ConfigError);
  CHECK_THROWS_AS(catalog("eig-3", 2), ConfigError);
  CHECK_THROWS_AS(catalog("eig-x", 2), ConfigError);
  CHECK_THROWS_AS(catalog("shifted-min", 2, {-1.0}), ConfigError);
  CHECK_THROWS_AS(catalog("P", 0), ConfigError);
  CHECK_THROWS_AS(catalog("trace", 2, {0.0, 1.0}), ConfigError);
}

TEST_CASE("catalog flags: constant coefficient, Hessian-only, negativity") {
  for (const char* name : {"P", "trace", "eig-1", "eig-2", "shifted-min"}) {
    const Subequation F = catalog(name, 2);
    CHECK(F.flags().constant_coefficient);
    CHECK(F.flags().hessian_only);
    CHECK(F.flags().has_negativity);
  }
}

TEST_CASE("property: Hessian-only flag is honest") {
  Rng rng(21);
  for (const char* name : {"P", "trace", "eig-1", "eig-2", "eig-3", "shifted-min"}) {
    const Subequation F = catalog(name, 3);
    for (int trial = 0; trial < 300; ++trial) {
      const MatrixXd g = rng.normal_matrix(3, 3);
      const SymMatrixd a(MatrixXd(g + g.transpose()));
      const Jet2d one(rng.normal(), rng.normal_vector(3), a);
      const Jet2d two(rng.normal() * 100.0, rng.normal_vector(3) * 100.0, a);
      CHECK(F.contains(one) == F.contains(two));
    }
  }
}

TEST_CASE("positivity checks") {
  CHECK(check_positivity(catalog("P", 3), 200, 1).passed);
  CHECK(check_positivity(catalog("trace", 3), 200, 2).passed);
  const Subequation broken("trace-upper", 2, [](const Jet2d& jet) { return jet.A.trace() <= 0.0; },
                           Subequation::Flags{});
  const PositivityReport report = check_positivity(broken, 50, 3);
  CHECK_FALSE(report.passed);
  REQUIRE(report.member_hessian.has_value());
  REQUIRE(report.added.has_value());
  CHECK(broken.contains(*report.member_hessian));
  CHECK_FALSE(broken.contains(*report.member_hessian + *report.added));
}

TEST_CASE("property: every catalog entry satisfies positivity over 10^3 trials") {
  for (const char* name : {"P", "trace", "eig-1", "eig-2", "shifted-min"}) {
    const PositivityReport report = check_positivity(catalog(name, 2), 1000, 99);
    CHECK_MESSAGE(report.passed, name);
    CHECK(report.trials == 1000);
  }
}

TEST_CASE("product membership with the P reducer") {
  const Subequation P = catalog("P", 1);
  const BlockSplit split{1, 1};
  CHECK(product_membership(P, split, hessian_jet(block(1, 1, 1))) == ProductVerdict::member);
  CHECK(product_membership(P, split, hessian_jet(block(1, 2, 1))) == ProductVerdict::not_member);
  CHECK(product_membership(P, split, hessian_jet(block(1, 0, -1))) == ProductVerdict::not_member);
  // d = 0, c = 0, b < 0 fails even though b d >= c^2
  CHECK(product_membership(P, split, hessian_jet(block(-1, 0, 0))) == ProductVerdict::not_member);
}

TEST_CASE("product membership with the trace reducer") {
  MatrixXd a = MatrixXd::Identity(3, 3);
  a(0, 2) = a(2, 0) = 1.0;
  const Subequation trace = catalog("trace", 2);
  CHECK(product_membership(trace, BlockSplit{2, 1}, hessian_jet(a)) == ProductVerdict::member);
  a(0, 0) = a(1, 1) = 0.1;
  CHECK(product_membership(trace, BlockSplit{2, 1}, hessian_jet(a)) == ProductVerdict::not_member);
  // sampled route agrees and is explicitly weaker on members
  a(0, 0) = a(1, 1) = 1.0;
  ProductMembershipConfig sampled;
  sampled.use_reducer = false;
  CHECK(product_membership(trace, BlockSplit{2, 1}, hessian_jet(a), sampled) == ProductVerdict::member_sampled);
}

TEST_CASE("product membership rejects non-Hessian-only F and bad splits") {
  const Subequation valued("valued", 1, [](const Jet2d& jet) { return jet.r <= 0.0; },
                           Subequation::Flags{true, false, true});
  CHECK_THROWS_AS(product_membership(valued, BlockSplit{1, 1}, hessian_jet(block(1, 0, 1))), PreconditionError);
  CHECK_THROWS_AS(product_membership(catalog("P", 1), BlockSplit{2, 1}, hessian_jet(block(1, 0, 1))),
                  DimensionError);
  ProductMembershipConfig bad;
  bad.gamma_samples = 0;
  CHECK_THROWS_AS(product_membership(catalog("P", 1), BlockSplit{1, 1}, hessian_jet(block(1, 0, 1)), bad),
                  PreconditionError);
}

TEST_CASE("property: sampling never contradicts the exact reducers") {
  Rng rng(7);
  int disagreements_checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = 1 + trial % 2;
    const Index m = 1 + (trial / 2) % 2;
    const MatrixXd g = rng.normal_matrix(n + m, n + m);
    MatrixXd a = 0.5 * (g + g.transpose());
    a.bottomRightCorner(m, m) += MatrixXd::Identity(m, m) * rng.uniform(0.0, 2.0);
    const Jet2d jet = hessian_jet(a);
    for (const char* name : {"P", "trace"}) {
      const Subequation F = catalog(name, n);
      ProductMembershipConfig cfg;
      cfg.seed = static_cast<std::uint64_t>(trial);
      cfg.gamma_samples = 32;
      cfg.use_reducer = false;
      const ProductVerdict sampled = product_membership(F, BlockSplit{n, m}, jet, cfg);
      cfg.use_reducer = true;
      const ProductVerdict exact = product_membership(F, BlockSplit{n, m}, jet, cfg);
      if (sampled == ProductVerdict::not_member) {
        CHECK(exact == ProductVerdict::not_member);
        ++disagreements_checked;
      }
    }
  }
  CHECK(disagreements_checked > 100);
}

TEST_CASE("property: scalar P reducer agrees with a dense gamma grid") {
  Rng rng(13);
  const Subequation P = catalog("P", 1);
  for (int trial = 0; trial < 300; ++trial) {
    const double b = rng.uniform(-1, 2), c = rng.uniform(-2, 2), d = rng.uniform(-0.2, 2);
    bool grid_member = d >= 0.0;
    for (int k = 0; k <= 200000 && grid_member; ++k) {
      const double gamma = -100.0 + 1e-3 * k;
      if (b + 2 * c * gamma + d * gamma * gamma < -1e-9) grid_member = false;
    }
    const bool reducer = product_membership(P, BlockSplit{1, 1}, hessian_jet(block(b, c, d))) == ProductVerdict::member;
    // the grid can miss minimisers outside [-100, 100] only when d is tiny
    if (d > 0.05 || d < 0.0) CHECK(grid_member == reducer);
  }
}

TEST_CASE("sum with a convex quadratic preserves membership") {
  const Jet2d id = hessian_jet(MatrixXd::Identity(2, 2));
  SumCheck s = add_convex_quadratic(catalog("P", 2), id, id);
  CHECK(s.sum_member);
  CHECK(s.sum.A == 2.0 * SymMatrixd::identity(2));

  s = add_convex_quadratic(catalog("eig-2", 2), hessian_jet(diag2(-1, 0)), hessian_jet(diag2(0, 1)));
  CHECK(s.f_member);
  CHECK(s.sum_member);
  CHECK(s.sum.A.eigenvalues()(1) == doctest::Approx(1.0));

  s = add_convex_quadratic(catalog("trace", 2), hessian_jet(diag2(1, -1)), hessian_jet(MatrixXd::Zero(2, 2)));
  CHECK(s.f_member);
  CHECK(s.sum_member);
  CHECK(s.implication_holds);

  CHECK_THROWS_AS(add_convex_quadratic(catalog("P", 2), id, hessian_jet(diag2(1, -1))), PreconditionError);
}

TEST_CASE("membership shift finds the entry threshold") {
  CHECK(catalog("P", 2).membership_shift(SymMatrixd(diag2(-3, 2))) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(catalog("trace", 2).membership_shift(SymMatrixd(diag2(-3, 2))) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(catalog("eig-2", 2).membership_shift(SymMatrixd(diag2(-3, 2))) == doctest::Approx(-2.0).epsilon(1e-9));
}
