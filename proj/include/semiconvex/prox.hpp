#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "semiconvex/field.hpp"

namespace semiconvex {

struct ResolventOptions {
  double tol = 1e-9;
  int max_iter = 100000;
};

struct ResolventSolveReport {
  VectorXd point;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// H(zeta): the unique minimiser of p -> f(p) + 1/2 |p|^2 - p.zeta, i.e. the
// single-valued inverse of G(p) = p + grad f(p). Requires a convexity
// certificate. The residual is |p + grad f(p) - zeta|; for fields with an
// analytic (sub)gradient, coordinates where the partial derivative of the
// objective changes sign across p count as zero, so kinks converge.
// Throws ConvergenceError when the budget runs out.
ResolventSolveReport resolvent_full(const ScalarField& f, const VectorXd& zeta, const ResolventOptions& options = {});

// H_1(u) for a convex field on the base space alone.
ResolventSolveReport resolvent_base(const ScalarField& g, const VectorXd& u, const ResolventOptions& options = {});

// Fiber contraction constant of H for a sigma-strongly fiber-convex field:
// mu = 1 / min{ (1 + sigma^2)^{1/2}, 1 + sigma / (1 + sigma^2)^{1/2} }.
double contraction_mu(double sigma);

struct NonexpansiveOptions {
  int pairs = 1000;
  std::uint64_t seed = 0;
  double tol = 1e-7;
  bool test_fiber = true;
  ResolventOptions resolvent{1e-12, 100000};
};

struct NonexpansiveReport {
  int pairs = 0;
  double full_ratio_max = 0.0;   // max |H(z1) - H(z2)| / |z1 - z2|
  double fiber_ratio_max = 0.0;  // max |pi2 H(z1) - pi2 H(z2)| / |z1 - z2|
  std::optional<double> mu;
  bool full_ok = true;
  bool fiber_ok = true;
  bool passed() const { return full_ok && fiber_ok; }
};

// Samples zeta pairs uniformly in the field's box.
NonexpansiveReport verify_nonexpansive(const ScalarField& f, const NonexpansiveOptions& options = {});

struct SampledCheckOptions {
  int samples = 200;
  std::uint64_t seed = 0;
  double step = 0.05;
  double tol = 1e-8;
};

struct MonotonicityReport {
  int pairs = 0;
  // min over pairs of (grad f(p2) - grad f(p1)).(p2 - p1) - sigma |y2 - y1|^2
  double worst_slack = 0.0;
  bool passed = true;
};

MonotonicityReport verify_monotonicity(const ScalarField& f, const SampledCheckOptions& options = {});

struct CertificateCheckReport {
  int segments = 0;
  // Worst normalised second differences; each entry stays at +inf / -inf
  // when the certificate is absent.
  double convexity_min = std::numeric_limits<double>::infinity();
  double fiber_convexity_min = std::numeric_limits<double>::infinity();
  double fiber_semiconcavity_max = -std::numeric_limits<double>::infinity();
  double semiconcavity_max = -std::numeric_limits<double>::infinity();
  bool passed = true;
};

// Second differences along random segments inside the domain. Joint
// convexity of f + kappa/2|x|^2 - sigma/2|y|^2 uses full directions; fibrewise
// certificates use fiber directions. Tolerance is relative to 1 + |f|.
CertificateCheckReport validate_certificates(const ScalarField& f, const SampledCheckOptions& options = {});

}  // namespace semiconvex
