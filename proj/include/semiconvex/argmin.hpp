#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semiconvex/field.hpp"
#include "semiconvex/prox.hpp"

namespace semiconvex {

struct ArgminOptions {
  double tol = 1e-9;
  int max_iter = 200;
  // Minimisers closer than this to a fiber face are rejected.
  double boundary_margin = 2e-3;
  std::optional<VectorXd> warm_start;
};

struct ArgminResult {
  VectorXd x;
  VectorXd gamma;
  double g_value = 0.0;
  int iterations = 0;
  double residual = 0.0;  // |grad_y f(x, gamma)|
  bool converged = false;
};

// Minimises y -> f(x, y) over the fiber box by damped Newton steps. Requires
// a fiber strong convexity certificate sigma > 0.
ArgminResult solve_argmin(const ScalarField& f, const VectorXd& x, const ArgminOptions& options = {});

// g(x) = min_y f(x, y) on the base box, gradient grad_x f(x, gamma(x)).
// Inherits the semiconvexity and sup-norm certificates of f.
ScalarField marginal_field(const ScalarField& f, const ArgminOptions& options = {});

// y - pi2 H(H1(x + u) + u, y) with H the resolvent of f and H1 that of g.
VectorXd functional_J(const ScalarField& f, const ScalarField& g, const VectorXd& x, const VectorXd& u,
                      const VectorXd& y, const ResolventOptions& options = {});

struct SupportVector {
  VectorXd x;
  VectorXd u;
  double kappa = 0.0;
  bool nonsmooth = false;
  // min over samples of g(x') - g(x) - u.(x' - x) + kappa/2 |x' - x|^2
  double worst_slack = 0.0;
};

struct ProbeOptions {
  double step = 1e-5;
  double kink_tol = 1e-4;
  int samples = 64;
  double radius = 0.1;
  double tol = 1e-8;
  std::uint64_t seed = 0;
};

// Lower support vector of a kappa-semiconvex g at x. Throws CertificateError
// when the sampled support inequality fails.
SupportVector subdifferential_probe(const ScalarField& g, const VectorXd& x, double kappa,
                                    const ProbeOptions& options = {});

struct FunctionalEquationReport {
  std::vector<VectorXd> points;
  std::vector<double> residuals;
  double max_residual = 0.0;
  bool passed = true;
};

struct FunctionalEquationOptions {
  double tol = 1e-6;
  ArgminOptions argmin;
  ResolventOptions resolvent{1e-12, 100000};
  ProbeOptions probe;
};

FunctionalEquationReport verify_functional_equation(const ScalarField& f, const ScalarField& g,
                                                    const std::vector<VectorXd>& grid,
                                                    const FunctionalEquationOptions& options = {});

struct FixedPointOptions {
  double tol = 1e-10;
  int max_iter = 1000;
  ResolventOptions resolvent{1e-13, 100000};
};

struct FixedPointResult {
  VectorXd y;
  int iterations = 0;
  // |y_{k+1} - y_k| / |y_k - y_{k-1}|, logged while both steps exceed
  // 1e6 x the resolvent tolerance
  std::vector<double> ratios;
  double mu = 1.0;
  bool converged = false;
};

// Banach iteration y <- pi2 H(H1(x + u) + u, y). Throws ConvergenceError on
// budget exhaustion and CertificateError when a logged ratio exceeds mu + tol.
FixedPointResult solve_J_fixed_point(const ScalarField& f, const ScalarField& g, const VectorXd& x,
                                     const VectorXd& u, const VectorXd& y0, const FixedPointOptions& options = {});

// f + kappa/2 |x|^2, convex when kappa is the semiconvexity certificate.
// Support vectors move by u~ = u + kappa x.
struct TildeShift {
  ScalarField field;
  double kappa = 0.0;

  VectorXd to_shifted(const VectorXd& x, const VectorXd& u) const { return u + kappa * x; }
  VectorXd from_shifted(const VectorXd& x, const VectorXd& u_shifted) const { return u_shifted - kappa * x; }
};

TildeShift tilde_shift(const ScalarField& f);

// Same shift applied to a base-only field (the marginal of f).
ScalarField shift_base(const ScalarField& g, double kappa);

// gamma(x) through the fixed point of J, shifting f and g when kappa > 0.
FixedPointResult argmin_by_fixed_point(const ScalarField& f, const ScalarField& g, const VectorXd& x,
                                       const VectorXd& u, const VectorXd& y0, const FixedPointOptions& options = {});

struct CalmnessOptions {
  double grid_step = 0.1;
  // Empty means {grid_step / 2, grid_step / 4}.
  std::vector<double> radii;
  double flag_factor = 10.0;
  int random_samples = 4;
  std::uint64_t seed = 0;
  ArgminOptions argmin;
};

struct CalmnessPoint {
  VectorXd x;
  VectorXd gamma;
  double constant = 0.0;    // max |gamma(x') - gamma(x)| / |x' - x|
  double secant_gap = 0.0;  // worst secant slope disagreement
  bool flagged = false;     // suspected non-differentiable
  MatrixXd jacobian;        // central secant estimate of D gamma, m x n
};

struct CalmnessReport {
  std::vector<CalmnessPoint> points;
  double flagged_fraction = 0.0;
  double max_constant = 0.0;
};

CalmnessReport calmness_scan(const ScalarField& f, const std::vector<VectorXd>& grid,
                             const CalmnessOptions& options = {});

// Regular grid with `per_axis` points per coordinate on [lower, upper].
std::vector<VectorXd> regular_grid(const VectorXd& lower, const VectorXd& upper, int per_axis);

}  // namespace semiconvex
