#include "semiconvex/jets.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "semiconvex/random.hpp"

namespace semiconvex {
namespace {

struct Differences {
  VectorXd gradient;
  MatrixXd hessian;
  double value = 0.0;
};

Differences central_differences(const ScalarField& f, const VectorXd& x, double h) {
  const Index n = x.size();
  Differences out;
  out.value = f(x);
  out.gradient.resize(n);
  out.hessian.resize(n, n);
  VectorXd probe = x;
  for (Index i = 0; i < n; ++i) {
    probe(i) = x(i) + h;
    const double plus = f(probe);
    probe(i) = x(i) - h;
    const double minus = f(probe);
    probe(i) = x(i);
    out.gradient(i) = (plus - minus) / (2.0 * h);
    out.hessian(i, i) = (plus + minus - 2.0 * out.value) / (h * h);
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      auto eval = [&](double si, double sj) {
        probe(i) = x(i) + si * h;
        probe(j) = x(j) + sj * h;
        const double v = f(probe);
        probe(i) = x(i);
        probe(j) = x(j);
        return v;
      };
      const double mixed = (eval(1, 1) - eval(1, -1) - eval(-1, 1) + eval(-1, -1)) / (4.0 * h * h);
      out.hessian(i, j) = mixed;
      out.hessian(j, i) = mixed;
    }
  }
  return out;
}

}  // namespace

JetEstimate estimate_jet(const ScalarField& f, const VectorXd& x, const JetEstimateOptions& options) {
  if (!(options.h > 0.0)) throw PreconditionError("jet step must be positive");
  if (x.size() != f.dimension()) throw DimensionError("jet point dimension does not match field");
  if (!f.domain().contains(x, 2.0 * options.h))
    throw DomainError("jet stencil leaves the domain of '" + f.name() + "'");

  const Differences coarse = central_differences(f, x, options.h);
  const Differences fine = central_differences(f, x, 0.5 * options.h);

  JetEstimate out;
  out.jet = Jet2d(coarse.value, coarse.gradient, SymMatrixd(coarse.hessian));
  out.disagreement = x.size() == 0 ? 0.0 : (coarse.hessian - fine.hessian).cwiseAbs().maxCoeff();
  out.unstable = !(out.disagreement <= options.stability_factor * options.h);
  return out;
}

ContactResult is_upper_contact_jet(const ScalarField& f, const VectorXd& x, const VectorXd& p,
                                   const SymMatrixd& A, const ContactOptions& options) {
  const Index n = x.size();
  if (!(options.radius > 0.0)) throw PreconditionError("contact radius must be positive");
  if (n != f.dimension() || p.size() != n || A.dimension() != n)
    throw DimensionError("contact jet dimensions do not match field");
  if (!f.domain().contains(x, options.radius)) throw DomainError("contact neighbourhood leaves the domain");

  const double fx = f(x);
  ContactResult result;
  result.worst_excess = -std::numeric_limits<double>::infinity();

  auto probe = [&](const VectorXd& step) {
    const double model = fx + p.dot(step) + 0.5 * step.dot(A.dense() * step);
    const double excess = f(x + step) - model;
    if (excess > result.worst_excess) result.worst_excess = excess;
    if (excess > options.tol && result.holds) {
      result.holds = false;
      result.counterexample = x + step;
    }
  };

  const double r = options.radius;
  for (Index i = 0; i < n; ++i) {
    for (double s : {1.0, -1.0}) {
      VectorXd step = VectorXd::Zero(n);
      step(i) = s * r;
      probe(step);
    }
  }
  const double diag = r / std::sqrt(2.0);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      for (double si : {1.0, -1.0}) {
        for (double sj : {1.0, -1.0}) {
          VectorXd step = VectorXd::Zero(n);
          step(i) = si * diag;
          step(j) = sj * diag;
          probe(step);
        }
      }
    }
  }
  Rng rng(options.seed);
  for (int k = 0; k < options.samples; ++k) probe(rng.in_ball(n, r));
  return result;
}

}  // namespace semiconvex
