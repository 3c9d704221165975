#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "semiconvex/field.hpp"

namespace semiconvex {

struct SupConvOptions {
  // Inner ascent stops once a step moves the shift by less than this.
  double tol = 1e-13;
  int max_iter = 20000;
  // Queries whose coordinates are exact multiples of this are memoised.
  double lattice_step = 0x1p-20;
  bool memoize = true;
};

// 2 sqrt(epsilon M).
double localization_radius(double epsilon, double sup_norm);

// Sup-convolution in the base variables,
//   f^eps(x, y) = sup_{z in U} f(z, y) - |z - x|^2 / (2 eps),
// maximised over z in the source base box U.
class SupConvField {
 public:
  struct Evaluation {
    double value = 0.0;
    VectorXd shift;     // maximising z - x
    VectorXd gradient;  // (shift / eps, grad_y f(x + shift, y))
    int iterations = 0;
    bool localized = true;  // |shift| < delta
  };

  SupConvField(ScalarField source, double epsilon, SupConvOptions options = {});

  const ScalarField& source() const;
  double epsilon() const;
  double delta() const;
  // U(delta) = {x : B_delta(x) in U}; throws DomainError when empty.
  Box localized_base() const;
  bool in_localized_base(const VectorXd& x) const;

  // Throws DomainError when x is outside U, ConvergenceError when the
  // inner ascent stalls.
  Evaluation evaluate(const VectorXd& z) const;
  double operator()(const VectorXd& z) const { return evaluate(z).value; }

  // Certificates: semiconvexity 1/eps with the source fiber convexity,
  // fiber semiconcavity = source semiconcavity when eps * that < 1, sup norm M.
  const ScalarField& field() const { return field_; }

  std::size_t cache_size() const;

 private:
  struct Impl;

  std::shared_ptr<Impl> impl_;
  ScalarField field_;
};

SupConvField partial_sup_convolve(const ScalarField& f, double epsilon, const SupConvOptions& options = {});

struct SupConvPropertyOptions {
  double tol = 1e-8;
  int segments = 200;
  double step = 0.05;
  std::uint64_t seed = 0;
  SupConvOptions supconv;
};

struct SupConvPropertyReport {
  std::vector<double> epsilons;
  std::vector<double> deltas;
  // worst of (f - f^eps) and (f^eps_small - f^eps_large) over the grid
  double ordering_violation = 0.0;
  // min second difference of f^eps + |x|^2/(2 eps); +inf when skipped
  double convexity_min = 0.0;
  bool convexity_checked = false;
  std::vector<double> distance_to_source;  // max |f^eps - f| per epsilon
  double max_shift_over_delta = 0.0;
  bool ordering_ok = true;
  bool convexity_ok = true;
  bool convergence_ok = true;
  bool localization_ok = true;
  bool passed() const { return ordering_ok && convexity_ok && convergence_ok && localization_ok; }
};

// `epsilons` must be decreasing; grid points are full (x, y) points.
SupConvPropertyReport verify_supconv_properties(const ScalarField& f, const std::vector<double>& epsilons,
                                                const std::vector<VectorXd>& grid,
                                                const SupConvPropertyOptions& options = {});

// f^eps + eps/2 |y|^2 with certificates (1/eps, sigma = eps, kappa2 = kappa + eps).
// Requires semiconcavity kappa and fiber convexity certificates and eps < 1/kappa.
ScalarField build_f_epsilon(const ScalarField& f, double epsilon, const SupConvOptions& options = {});

struct FiberSemiconcavityOptions {
  int samples = 1000;
  double step = 0.1;
  double tol = 1e-8;
  std::uint64_t seed = 0;
};

struct FiberSemiconcavityReport {
  int samples = 0;
  // max of h(y + s v) + h(y - s v) - 2 h(y), h = field - kappa2/2 |y|^2
  double worst = 0.0;
  VectorXd witness;
  VectorXd witness_direction;
  bool passed = true;
};

// Samples triples along fiber segments with base coordinates fixed, inside
// `region` (defaults to the field domain).
FiberSemiconcavityReport verify_fiber_semiconcavity(const ScalarField& field, double kappa2,
                                                    const FiberSemiconcavityOptions& options = {},
                                                    std::optional<Box> region = std::nullopt);

}  // namespace semiconvex
