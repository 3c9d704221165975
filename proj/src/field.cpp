#include "semiconvex/field.hpp"

#include <cmath>

#include "semiconvex/errors.hpp"

namespace semiconvex {

Box::Box(VectorXd lower, VectorXd upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw DimensionError("box bounds differ in dimension");
  for (Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_(i) <= upper_(i))) throw DomainError("box lower bound exceeds upper bound");
  }
}

Box Box::cube(Index dim, double half_width) {
  return Box(VectorXd::Constant(dim, -half_width), VectorXd::Constant(dim, half_width));
}

Box Box::product(const Box& base, const Box& fiber) {
  VectorXd lo(base.dimension() + fiber.dimension());
  VectorXd hi(lo.size());
  lo << base.lower(), fiber.lower();
  hi << base.upper(), fiber.upper();
  return Box(lo, hi);
}

bool Box::contains(const VectorXd& z, double margin) const {
  if (z.size() != dimension()) return false;
  for (Index i = 0; i < z.size(); ++i) {
    if (!(z(i) >= lower_(i) + margin && z(i) <= upper_(i) - margin)) return false;
  }
  return true;
}

VectorXd Box::clamp(const VectorXd& z) const { return z.cwiseMax(lower_).cwiseMin(upper_); }

double Box::max_norm() const { return lower_.cwiseAbs().cwiseMax(upper_.cwiseAbs()).norm(); }

Box Box::head(Index n) const { return Box(lower_.head(n), upper_.head(n)); }

Box Box::tail(Index m) const { return Box(lower_.tail(m), upper_.tail(m)); }

Box Box::shrunk(double margin) const {
  VectorXd lo = lower_.array() + margin;
  VectorXd hi = upper_.array() - margin;
  for (Index i = 0; i < lo.size(); ++i) {
    if (lo(i) > hi(i)) throw DomainError("shrunken box is empty");
  }
  return Box(lo, hi);
}

ScalarField::ScalarField(std::string name, Index base_dim, Index fiber_dim, Box domain, ValueFn value,
                         GradientFn gradient, Certificates certificates)
    : name_(std::move(name)),
      base_dim_(base_dim),
      fiber_dim_(fiber_dim),
      domain_(std::move(domain)),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      certificates_(certificates) {
  if (base_dim_ < 0 || fiber_dim_ < 0 || base_dim_ + fiber_dim_ == 0)
    throw DimensionError("field dimensions must be nonnegative with positive total");
  if (domain_.dimension() != base_dim_ + fiber_dim_)
    throw DimensionError("field domain dimension does not match base + fiber");
  if (!value_) throw PreconditionError("field requires a value callback");
}

void ScalarField::check_size(const VectorXd& z) const {
  if (z.size() != dimension()) throw DimensionError("point dimension does not match field '" + name_ + "'");
}

double ScalarField::operator()(const VectorXd& z) const {
  check_size(z);
  return value_(z);
}

VectorXd ScalarField::gradient(const VectorXd& z) const {
  check_size(z);
  if (gradient_) return gradient_(z);
  return central_gradient(value_, z, 1e-5 * (1.0 + z.norm()));
}

ScalarField ScalarField::with_certificates(Certificates certificates) const {
  ScalarField copy = *this;
  copy.certificates_ = certificates;
  return copy;
}

ScalarField ScalarField::renamed(std::string name) const {
  ScalarField copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

VectorXd ScalarField::join(const VectorXd& x, const VectorXd& y) {
  VectorXd z(x.size() + y.size());
  z << x, y;
  return z;
}

VectorXd central_gradient(const ScalarField::ValueFn& f, const VectorXd& z, double h) {
  VectorXd grad(z.size());
  VectorXd probe = z;
  for (Index i = 0; i < z.size(); ++i) {
    probe(i) = z(i) + h;
    const double plus = f(probe);
    probe(i) = z(i) - h;
    const double minus = f(probe);
    probe(i) = z(i);
    grad(i) = (plus - minus) / (2.0 * h);
  }
  return grad;
}

}  // namespace semiconvex
