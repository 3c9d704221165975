#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace semiconvex {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Axis-aligned box [lower, upper].
class Box {
 public:
  Box() = default;
  Box(VectorXd lower, VectorXd upper);

  static Box cube(Index dim, double half_width);
  static Box product(const Box& base, const Box& fiber);

  Index dimension() const { return lower_.size(); }
  const VectorXd& lower() const { return lower_; }
  const VectorXd& upper() const { return upper_; }

  // True when every coordinate is at least `margin` away from the faces.
  bool contains(const VectorXd& z, double margin = 0.0) const;
  VectorXd center() const { return 0.5 * (lower_ + upper_); }
  VectorXd clamp(const VectorXd& z) const;
  // Largest Euclidean norm attained on the box.
  double max_norm() const;
  Box head(Index n) const;
  Box tail(Index m) const;
  // Shrinks every face inward by `margin`; empty boxes throw DomainError.
  Box shrunk(double margin) const;

 private:
  VectorXd lower_;
  VectorXd upper_;
};

// Regularity certificates of a field on base x fiber. With both present,
// kappa and sigma certify that f + kappa/2 |x|^2 - sigma/2 |y|^2 is jointly
// convex; sigma alone certifies strong convexity of each fiber y -> f(x, y).
struct Certificates {
  std::optional<double> semiconvexity;        // kappa
  std::optional<double> fiber_convexity;      // sigma
  std::optional<double> fiber_semiconcavity;  // kappa2: y -> f - kappa2/2 |y|^2 concave
  std::optional<double> semiconcavity;        // f - c/2 |z|^2 concave in all variables
  std::optional<double> sup_norm;             // M >= sup |f| on the working box
  std::optional<double> lipschitz;

  bool convex() const { return semiconvexity && *semiconvexity <= 0.0; }
};

class ScalarField {
 public:
  using ValueFn = std::function<double(const VectorXd&)>;
  using GradientFn = std::function<VectorXd(const VectorXd&)>;

  ScalarField() = default;
  ScalarField(std::string name, Index base_dim, Index fiber_dim, Box domain, ValueFn value,
              GradientFn gradient = {}, Certificates certificates = {});

  const std::string& name() const { return name_; }
  Index base_dim() const { return base_dim_; }
  Index fiber_dim() const { return fiber_dim_; }
  Index dimension() const { return base_dim_ + fiber_dim_; }
  const Box& domain() const { return domain_; }
  Box base_domain() const { return domain_.head(base_dim_); }
  Box fiber_domain() const { return domain_.tail(fiber_dim_); }
  const Certificates& certificates() const { return certificates_; }
  bool has_analytic_gradient() const { return static_cast<bool>(gradient_); }

  double operator()(const VectorXd& z) const;
  double operator()(const VectorXd& x, const VectorXd& y) const { return (*this)(join(x, y)); }

  // Analytic gradient when available, otherwise central differences with
  // step 1e-5 (1 + |z|).
  VectorXd gradient(const VectorXd& z) const;

  ScalarField with_certificates(Certificates certificates) const;
  ScalarField renamed(std::string name) const;

  static VectorXd join(const VectorXd& x, const VectorXd& y);

 private:
  void check_size(const VectorXd& z) const;

  std::string name_;
  Index base_dim_ = 0;
  Index fiber_dim_ = 0;
  Box domain_;
  ValueFn value_;
  GradientFn gradient_;
  Certificates certificates_;
};

VectorXd central_gradient(const ScalarField::ValueFn& f, const VectorXd& z, double h);

}  // namespace semiconvex
