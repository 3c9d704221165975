#include "semiconvex/harness/contact.hpp"

#include <limits>

#include "semiconvex/errors.hpp"
#include "semiconvex/random.hpp"

namespace semiconvex {

ContactQuadratic::ContactQuadratic(Jet2d base_jet, VectorXd x0, VectorXd y0, MatrixXd slope, double kappa2,
                                   double epsilon)
    : base_(std::move(base_jet)),
      x0_(std::move(x0)),
      y0_(std::move(y0)),
      slope_(std::move(slope)),
      kappa2_(kappa2),
      epsilon_(epsilon) {
  const Index n = base_.dimension();
  const Index m = y0_.size();
  if (x0_.size() != n || slope_.rows() != m || slope_.cols() != n)
    throw DimensionError("contact quadratic: jet, base point and slope dimensions disagree");
  const MatrixXd id_n = MatrixXd::Identity(n, n);
  MatrixXd hessian(n + m, n + m);
  hessian.topLeftCorner(n, n) = base_.A.dense() + epsilon_ * id_n + 2.0 * kappa2_ * slope_.transpose() * slope_;
  hessian.topRightCorner(n, m) = -2.0 * kappa2_ * slope_.transpose();
  hessian.bottomLeftCorner(m, n) = -2.0 * kappa2_ * slope_;
  hessian.bottomRightCorner(m, m) = 2.0 * kappa2_ * MatrixXd::Identity(m, m);
  VectorXd grad = VectorXd::Zero(n + m);
  grad.head(n) = base_.p;
  jet_ = Jet2d(base_.r, grad, SymMatrixd(hessian));
}

double ContactQuadratic::operator()(const VectorXd& x, const VectorXd& y) const {
  const VectorXd dx = x - x0_;
  const VectorXd d = y - y0_ - slope_ * dx;
  return base_.r + base_.p.dot(dx) + 0.5 * dx.dot(base_.A.dense() * dx) + 0.5 * epsilon_ * dx.squaredNorm() +
         kappa2_ * d.squaredNorm();
}

double ContactQuadratic::operator()(const VectorXd& z) const {
  const Index n = x0_.size();
  if (z.size() != n + y0_.size()) throw DimensionError("contact quadratic argument has the wrong dimension");
  return (*this)(VectorXd(z.head(n)), VectorXd(z.tail(y0_.size())));
}

ScalarField ContactQuadratic::field(const Box& domain) const {
  const ContactQuadratic q = *this;
  const Index n = x0_.size();
  const Index m = y0_.size();
  const MatrixXd hessian = jet_.A.dense();
  VectorXd center(n + m);
  center << x0_, y0_;
  return ScalarField(
      "contact-quadratic", n, m, domain, [q](const VectorXd& z) { return q(z); },
      [hessian, center, grad = jet_.p](const VectorXd& z) -> VectorXd { return grad + hessian * (z - center); });
}

ContactQuadratic build_contact_quadratic(const Jet2d& base_jet, const MatrixXd& slope, double kappa2,
                                         double epsilon, const VectorXd& x0, const VectorXd& y0) {
  return ContactQuadratic(base_jet, x0, y0, slope, kappa2, epsilon);
}

DominationCheck check_domination(const ContactQuadratic& q, const ScalarField& f, const DominationOptions& options) {
  const Index n = q.x0().size();
  const Index m = q.y0().size();
  if (f.base_dim() != n || f.fiber_dim() != m) throw DimensionError("domination check: field dimensions differ");
  VectorXd center(n + m);
  center << q.x0(), q.y0();
  Rng rng(options.seed);
  DominationCheck check;
  check.worst_slack = std::numeric_limits<double>::infinity();
  for (int k = 0; k < options.samples; ++k) {
    const VectorXd z = f.domain().clamp(center + rng.in_ball(n + m, options.radius));
    const double slack = q(z) - f(z);
    if (slack < check.worst_slack) {
      check.worst_slack = slack;
      check.witness = z;
    }
    ++check.samples;
  }
  check.holds = check.worst_slack >= -options.tol;
  return check;
}

}  // namespace semiconvex
