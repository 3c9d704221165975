#include "semiconvex/subequations.hpp"

#include <cmath>
#include <limits>

#include "semiconvex/random.hpp"

namespace semiconvex {

Subequation::Subequation(std::string name, Index dimension, Predicate membership, Flags flags,
                         ProductReducer reducer)
    : name_(std::move(name)),
      dimension_(dimension),
      membership_(std::move(membership)),
      flags_(flags),
      reducer_(std::move(reducer)) {
  if (dimension_ < 1) throw PreconditionError("subequation dimension must be positive");
  if (!membership_) throw PreconditionError("subequation requires a membership predicate");
}

bool Subequation::contains(const Jet2d& jet) const {
  if (jet.dimension() != dimension_) throw DimensionError("jet dimension does not match subequation " + name_);
  return membership_(jet);
}

bool Subequation::contains(const SymMatrixd& hessian) const {
  return contains(Jet2d(0.0, VectorXd::Zero(hessian.dimension()), hessian));
}

std::optional<bool> Subequation::reduce_product(const Jet2d& jet, const BlockSplit& split) const {
  if (!reducer_) return std::nullopt;
  return reducer_(jet, split);
}

double Subequation::membership_shift(const SymMatrixd& hessian, double tol) const {
  const SymMatrixd id = SymMatrixd::identity(hessian.dimension());
  auto member = [&](double t) { return contains(hessian + t * id); };
  double hi = 1.0;
  while (!member(hi)) {
    hi *= 2.0;
    if (hi > 1e12) throw PreconditionError("no shift of the Hessian enters " + name_);
  }
  double lo = -1.0;
  while (member(lo)) {
    lo *= 2.0;
    if (lo < -1e12) return -std::numeric_limits<double>::infinity();
  }
  if (hi < lo) hi = lo;  // unreachable for sets with Positivity
  while (hi - lo > tol * (1.0 + std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    (member(mid) ? hi : lo) = mid;
  }
  return hi;
}

namespace {

double parameter(const std::vector<double>& params, std::size_t index, double fallback) {
  return index < params.size() ? params[index] : fallback;
}

void expect_at_most(const std::vector<double>& params, std::size_t count, const std::string& name) {
  if (params.size() > count) throw ConfigError("too many parameters for subequation " + name);
  for (double v : params) {
    if (!std::isfinite(v)) throw ConfigError("non-finite parameter for subequation " + name);
  }
}

bool trace_product_member(const Jet2d& jet, const BlockSplit& split, double theta) {
  const MatrixXd b = split.B(jet);
  const MatrixXd c = split.C(jet);
  const MatrixXd d = split.D(jet);
  if (split.m == 0) return b.trace() >= theta - kMembershipSlack;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(d);
  const VectorXd lambda = eig.eigenvalues();
  const MatrixXd v = eig.eigenvectors();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  double correction = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -kMembershipSlack) return false;
    const VectorXd cv = c * v.col(i);
    if (lambda(i) <= 1e-12 * scale) {
      // tr(B) + 2 tr(C Gamma) + tr(Gamma^t D Gamma) is unbounded below along
      // kernel directions of D that C sees.
      if (cv.norm() > 1e-9) return false;
    } else {
      correction += cv.squaredNorm() / lambda(i);
    }
  }
  return b.trace() - correction >= theta - kMembershipSlack;
}

}  // namespace

Subequation catalog(const std::string& name, Index n, const std::vector<double>& parameters) {
  if (n < 1) throw ConfigError("subequation dimension must be positive");
  const Subequation::Flags flags{};
  if (name == "P") {
    expect_at_most(parameters, 0, name);
    return Subequation(
        name, n, [](const Jet2d& jet) { return jet.A.is_positive_semidefinite(kMembershipSlack); }, flags,
        [](const Jet2d& jet, const BlockSplit& split) {
          split.check(jet);
          return jet.A.is_positive_semidefinite(kMembershipSlack);
        });
  }
  if (name == "trace") {
    expect_at_most(parameters, 1, name);
    const double theta = parameter(parameters, 0, 0.0);
    return Subequation(
        name, n, [theta](const Jet2d& jet) { return jet.A.trace() >= theta - kMembershipSlack; }, flags,
        [theta](const Jet2d& jet, const BlockSplit& split) {
          split.check(jet);
          return trace_product_member(jet, split, theta);
        });
  }
  if (name == "shifted-min") {
    expect_at_most(parameters, 1, name);
    const double c = parameter(parameters, 0, 0.0);
    if (c < 0.0) throw ConfigError("shifted-min requires c >= 0");
    return Subequation(
        name, n, [c](const Jet2d& jet) { return jet.A.min_eigenvalue() >= -c - kMembershipSlack; }, flags);
  }
  if (name.rfind("eig-", 0) == 0) {
    expect_at_most(parameters, 1, name);
    Index k = 0;
    try {
      std::size_t used = 0;
      k = std::stol(name.substr(4), &used);
      if (used != name.size() - 4) k = 0;
    } catch (const std::exception&) {
      k = 0;
    }
    if (k < 1 || k > n) throw ConfigError("eig-k requires 1 <= k <= n, got " + name);
    const double theta = parameter(parameters, 0, 0.0);
    return Subequation(
        name, n,
        [k, theta](const Jet2d& jet) { return jet.A.eigenvalues()(k - 1) >= theta - kMembershipSlack; },
        flags);
  }
  throw ConfigError("unknown subequation '" + name + "'");
}

PositivityReport check_positivity(const Subequation& F, int trials, std::uint64_t seed) {
  if (trials < 1) throw PreconditionError("positivity check needs at least one trial");
  const Index n = F.dimension();
  Rng rng(seed);
  PositivityReport report;
  for (int trial = 0; trial < trials; ++trial) {
    const MatrixXd g = rng.normal_matrix(n, n);
    const SymMatrixd raw(MatrixXd(g + g.transpose()));
    std::optional<SymMatrixd> member;
    for (double t = 0.0; std::abs(t) < 1.1e6 && !member; t = (t <= 0.0 ? 1.0 - 2.0 * t : -t)) {
      // visits 0, 1, -1, 3, -3, 7, -7, ...
      const SymMatrixd shifted = raw + t * SymMatrixd::identity(n);
      if (F.contains(shifted)) member = shifted;
    }
    ++report.trials;
    if (!member) continue;
    SymMatrixd added;
    if (trial == 0) {
      added = SymMatrixd::identity(n);
    } else if (trial == 1) {
      added = 10.0 * SymMatrixd::identity(n);
    } else {
      const MatrixXd factor = rng.normal_matrix(n, n) * std::pow(10.0, rng.uniform(-2.0, 1.0));
      added = SymMatrixd(MatrixXd(factor.transpose() * factor));
    }
    if (!F.contains(*member + added)) {
      report.passed = false;
      report.member_hessian = *member;
      report.added = added;
      return report;
    }
  }
  return report;
}

const char* to_string(ProductVerdict verdict) {
  switch (verdict) {
    case ProductVerdict::member:
      return "member";
    case ProductVerdict::not_member:
      return "not_member";
    case ProductVerdict::member_sampled:
      return "member_sampled";
  }
  return "unknown";
}

ProductVerdict product_membership(const Subequation& F, const BlockSplit& split, const Jet2d& jet,
                                  const ProductMembershipConfig& config) {
  if (!F.flags().hessian_only || !F.flags().constant_coefficient)
    throw PreconditionError("product membership needs a constant-coefficient Hessian-only subequation");
  if (config.gamma_samples < 1 || !(config.gamma_radius > 0.0))
    throw PreconditionError("product membership needs gamma_samples >= 1 and gamma_radius > 0");
  split.check(jet);
  if (F.dimension() != split.n) throw DimensionError("subequation dimension does not match base dimension");

  const SymMatrixd fiber(MatrixXd(split.D(jet)));
  if (!fiber.is_positive_semidefinite(kMembershipSlack)) return ProductVerdict::not_member;

  if (config.use_reducer && F.has_product_reducer())
    return *F.reduce_product(jet, split) ? ProductVerdict::member : ProductVerdict::not_member;

  auto slice_ok = [&](const MatrixXd& gamma) { return F.contains(pullback_slice(jet, split, gamma)); };
  if (!slice_ok(MatrixXd::Zero(split.m, split.n))) return ProductVerdict::not_member;
  if (split.m > 0 && fiber.min_eigenvalue() > 1e-12) {
    const MatrixXd critical = -fiber.dense().ldlt().solve(MatrixXd(split.C(jet)).transpose());
    if (!slice_ok(critical)) return ProductVerdict::not_member;
  }
  Rng rng(config.seed);
  for (int k = 0; k < config.gamma_samples; ++k) {
    MatrixXd gamma(split.m, split.n);
    for (Index j = 0; j < split.n; ++j)
      for (Index i = 0; i < split.m; ++i) gamma(i, j) = rng.uniform(-config.gamma_radius, config.gamma_radius);
    if (!slice_ok(gamma)) return ProductVerdict::not_member;
  }
  return ProductVerdict::member_sampled;
}

SumCheck add_convex_quadratic(const Subequation& F, const Jet2d& f_jet, const Jet2d& q_jet) {
  if (!F.flags().hessian_only) throw PreconditionError("sum rule needs a Hessian-only subequation");
  if (!q_jet.A.is_positive_semidefinite(kMembershipSlack))
    throw PreconditionError("added quadratic must have a semipositive Hessian");
  SumCheck check;
  check.sum = f_jet + q_jet;
  check.f_member = F.contains(f_jet);
  check.sum_member = F.contains(check.sum);
  check.implication_holds = !check.f_member || check.sum_member;
  return check;
}

}  // namespace semiconvex
