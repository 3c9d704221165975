#pragma once

#include <cstdint>
#include <optional>

#include "semiconvex/field.hpp"
#include "semiconvex/jets.hpp"

namespace semiconvex {

// q(x, y) = r + p.(x - x0) + 1/2 (x - x0)^t (A + eps I) (x - x0) + kappa2 |y - y0 - G (x - x0)|^2
// for a base jet (r, p, A) at x0 and a fiber slope G (m x n).
class ContactQuadratic {
 public:
  ContactQuadratic(Jet2d base_jet, VectorXd x0, VectorXd y0, MatrixXd slope, double kappa2, double epsilon);

  double operator()(const VectorXd& x, const VectorXd& y) const;
  double operator()(const VectorXd& z) const;
  // Jet at (x0, y0) on the product space.
  const Jet2d& jet() const { return jet_; }
  const VectorXd& x0() const { return x0_; }
  const VectorXd& y0() const { return y0_; }
  const MatrixXd& slope() const { return slope_; }
  ScalarField field(const Box& domain) const;

 private:
  Jet2d base_;
  VectorXd x0_;
  VectorXd y0_;
  MatrixXd slope_;
  double kappa2_;
  double epsilon_;
  Jet2d jet_;
};

ContactQuadratic build_contact_quadratic(const Jet2d& base_jet, const MatrixXd& slope, double kappa2,
                                         double epsilon, const VectorXd& x0, const VectorXd& y0);

struct DominationOptions {
  double radius = 0.05;
  int samples = 16;
  double tol = 1e-9;
  std::uint64_t seed = 0;
};

struct DominationCheck {
  int samples = 0;
  double worst_slack = 0.0;  // min of q - f over the samples
  std::optional<VectorXd> witness;
  bool holds = true;
};

// Samples q >= f on a ball around (x0, y0), clipped to the domain of f.
DominationCheck check_domination(const ContactQuadratic& q, const ScalarField& f,
                                 const DominationOptions& options = {});

}  // namespace semiconvex
