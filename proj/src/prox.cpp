#include "semiconvex/prox.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semiconvex/errors.hpp"
#include "semiconvex/random.hpp"

namespace semiconvex {
namespace {

// phi(p) = f(p) + 1/2 |p|^2 - p.zeta, 1-strongly convex.
class ProxObjective {
 public:
  ProxObjective(const ScalarField& f, const VectorXd& zeta) : f_(f), zeta_(zeta) {}

  double value(const VectorXd& p) const { return f_(p) + 0.5 * p.squaredNorm() - p.dot(zeta_); }
  VectorXd gradient(const VectorXd& p) const { return f_.gradient(p) + p - zeta_; }
  double partial(const VectorXd& p, Index i) const { return f_.gradient(p)(i) + p(i) - zeta_(i); }

  // |grad phi| with sign-change brackets counted as zero (analytic gradients only).
  double residual(const VectorXd& p, const VectorXd& grad, double tol) const {
    if (grad.norm() <= tol || !f_.has_analytic_gradient()) return grad.norm();
    double sum = 0.0;
    VectorXd probe = p;
    for (Index i = 0; i < p.size(); ++i) {
      const double eta = 1e-10 * (1.0 + std::abs(p(i)));
      probe(i) = p(i) - eta;
      const double left = partial(probe, i);
      probe(i) = p(i) + eta;
      const double right = partial(probe, i);
      probe(i) = p(i);
      if (!(left <= 0.0 && right >= 0.0)) sum += grad(i) * grad(i);
    }
    return std::sqrt(sum);
  }

  // Exact line search along each coordinate by bisection on the sign of the
  // partial derivative. Strong convexity puts the 1-D minimiser within
  // |partial| of the current coordinate.
  void polish(VectorXd& p) const {
    for (Index i = 0; i < p.size(); ++i) {
      const double g = partial(p, i);
      if (g == 0.0) continue;
      double lo = g > 0.0 ? p(i) - g : p(i);
      double hi = g > 0.0 ? p(i) : p(i) - g;
      VectorXd probe = p;
      for (int k = 0; k < 200 && hi > lo; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        probe(i) = mid;
        (partial(probe, i) > 0.0 ? hi : lo) = mid;
      }
      probe(i) = 0.5 * (lo + hi);
      if (value(probe) <= value(p)) p = probe;
    }
  }

 private:
  const ScalarField& f_;
  const VectorXd& zeta_;
};

ResolventSolveReport solve_resolvent(const ScalarField& f, const VectorXd& zeta, const ResolventOptions& options) {
  if (zeta.size() != f.dimension()) throw DimensionError("resolvent argument dimension does not match field");
  if (!f.certificates().convex())
    throw CertificateError("resolvent of '" + f.name() + "' needs a convexity certificate");
  if (!zeta.allFinite()) throw PreconditionError("resolvent argument must be finite");

  const ProxObjective phi(f, zeta);
  ResolventSolveReport report;
  VectorXd x = zeta;
  VectorXd x_prev = x;
  double lipschitz = 1.0;
  double fx = phi.value(x);
  double best = fx;
  int since_progress = 0;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    const VectorXd gx = phi.gradient(x);
    if (gx.norm() <= options.tol) {
      report.point = x;
      report.residual = gx.norm();
      report.iterations = iter;
      report.converged = true;
      return report;
    }
    if (since_progress >= 30) {
      // values have stalled at rounding level; descend on |grad phi| instead
      double step_l = lipschitz;
      VectorXd g = gx;
      for (int inner = 0; inner < 5000 && step_l <= 1e12 && g.norm() > options.tol; ++inner) {
        const VectorXd trial = x - g / step_l;
        const VectorXd gt = phi.gradient(trial);
        if (gt.norm() < g.norm()) {
          x = trial;
          g = gt;
          step_l = std::max(1.0, 0.7 * step_l);
        } else {
          step_l *= 2.0;
        }
      }
      if (g.norm() > options.tol) phi.polish(x);
      const VectorXd gp = phi.gradient(x);
      const double residual = phi.residual(x, gp, options.tol);
      if (residual <= options.tol) {
        report.point = x;
        report.residual = residual;
        report.iterations = iter;
        report.converged = true;
        return report;
      }
      x_prev = x;
      fx = phi.value(x);
      best = fx;
      since_progress = 0;
      lipschitz = 1.0;
      iter += 100;
      continue;
    }

    const double q = std::sqrt(lipschitz);
    const double beta = (q - 1.0) / (q + 1.0);
    const VectorXd y = x + beta * (x - x_prev);
    const VectorXd gy = phi.gradient(y);
    const double fy = phi.value(y);
    VectorXd next;
    double fnext = 0.0;
    for (;;) {
      next = y - gy / lipschitz;
      fnext = phi.value(next);
      const double slack = 1e-15 * (1.0 + std::abs(fy));
      if (fnext <= fy - 0.5 * gy.squaredNorm() / lipschitz + slack || lipschitz > 1e16) break;
      lipschitz *= 2.0;
    }
    if (fnext > fx) {
      // momentum overshoot: restart from x
      x_prev = x;
    } else {
      x_prev = x;
      x = next;
      fx = fnext;
    }
    lipschitz = std::max(1.0, 0.9 * lipschitz);
    if (fx < best - 1e-15 * (1.0 + std::abs(best))) {
      best = fx;
      since_progress = 0;
    } else {
      ++since_progress;
    }
  }
  throw ConvergenceError("resolvent of '" + f.name() + "' did not converge within the iteration budget");
}

}  // namespace

ResolventSolveReport resolvent_full(const ScalarField& f, const VectorXd& zeta, const ResolventOptions& options) {
  return solve_resolvent(f, zeta, options);
}

ResolventSolveReport resolvent_base(const ScalarField& g, const VectorXd& u, const ResolventOptions& options) {
  if (g.fiber_dim() != 0) throw DimensionError("base resolvent expects a field on the base space only");
  return solve_resolvent(g, u, options);
}

double contraction_mu(double sigma) {
  if (!(sigma > 0.0)) throw PreconditionError("contraction constant needs sigma > 0");
  const double root = std::sqrt(1.0 + sigma * sigma);
  return 1.0 / std::min(root, 1.0 + sigma / root);
}

NonexpansiveReport verify_nonexpansive(const ScalarField& f, const NonexpansiveOptions& options) {
  NonexpansiveReport report;
  if (options.test_fiber) {
    const auto& cert = f.certificates();
    if (!cert.fiber_convexity || !(*cert.fiber_convexity > 0.0) || !cert.convex())
      throw CertificateError("fiber contraction test needs convexity and sigma > 0 certificates");
    report.mu = contraction_mu(*cert.fiber_convexity);
  }
  Rng rng(options.seed);
  const Box& box = f.domain();
  const Index m = f.fiber_dim();
  for (int k = 0; k < options.pairs; ++k) {
    const VectorXd z1 = rng.uniform_vector(box.lower(), box.upper());
    const VectorXd z2 = rng.uniform_vector(box.lower(), box.upper());
    const double dz = (z1 - z2).norm();
    if (dz == 0.0) continue;
    const VectorXd h1 = resolvent_full(f, z1, options.resolvent).point;
    const VectorXd h2 = resolvent_full(f, z2, options.resolvent).point;
    report.full_ratio_max = std::max(report.full_ratio_max, (h1 - h2).norm() / dz);
    if (m > 0) report.fiber_ratio_max = std::max(report.fiber_ratio_max, (h1.tail(m) - h2.tail(m)).norm() / dz);
    ++report.pairs;
  }
  report.full_ok = report.full_ratio_max <= 1.0 + options.tol;
  if (report.mu) report.fiber_ok = report.fiber_ratio_max <= *report.mu + options.tol;
  return report;
}

MonotonicityReport verify_monotonicity(const ScalarField& f, const SampledCheckOptions& options) {
  const auto& cert = f.certificates();
  if (!cert.convex()) throw CertificateError("monotonicity check needs a convexity certificate");
  const double sigma = cert.fiber_convexity.value_or(0.0);
  Rng rng(options.seed);
  const Box& box = f.domain();
  const Index m = f.fiber_dim();
  MonotonicityReport report;
  report.worst_slack = std::numeric_limits<double>::infinity();
  for (int k = 0; k < options.samples; ++k) {
    const VectorXd p1 = rng.uniform_vector(box.lower(), box.upper());
    const VectorXd p2 = rng.uniform_vector(box.lower(), box.upper());
    const double lhs = (f.gradient(p2) - f.gradient(p1)).dot(p2 - p1);
    const double slack = lhs - sigma * (p2.tail(m) - p1.tail(m)).squaredNorm();
    report.worst_slack = std::min(report.worst_slack, slack);
    ++report.pairs;
  }
  report.passed = report.worst_slack >= -options.tol;
  return report;
}

CertificateCheckReport validate_certificates(const ScalarField& f, const SampledCheckOptions& options) {
  const auto& cert = f.certificates();
  const Index n = f.base_dim();
  const Index m = f.fiber_dim();
  const Index d = f.dimension();
  const double s = options.step;
  const Box inner = f.domain().shrunk(s);
  Rng rng(options.seed);
  CertificateCheckReport report;

  // Second difference of f + quadratic(a/2 |x|^2 + b/2 |y|^2) along s*dir,
  // divided by s^2 and by 1 + |f(z)|.
  auto second = [&](const VectorXd& z, const VectorXd& dir, double a, double b) {
    const VectorXd step = s * dir;
    const double quad = (a * step.head(n).squaredNorm() + b * step.tail(m).squaredNorm());
    const double f0 = f(z);
    const double diff = f(z + step) + f(z - step) - 2.0 * f0 + quad;
    return diff / (s * s) / (1.0 + std::abs(f0));
  };

  for (int k = 0; k < options.samples; ++k) {
    const VectorXd z = rng.uniform_vector(inner.lower(), inner.upper());
    const VectorXd dir = rng.on_sphere(d, 1.0);
    VectorXd fiber_dir = VectorXd::Zero(d);
    if (m > 0) fiber_dir.tail(m) = rng.on_sphere(m, 1.0);

    if (cert.semiconvexity) {
      const double sigma = cert.fiber_convexity.value_or(0.0);
      report.convexity_min = std::min(report.convexity_min, second(z, dir, *cert.semiconvexity, -sigma));
    } else if (cert.fiber_convexity && m > 0) {
      report.fiber_convexity_min =
          std::min(report.fiber_convexity_min, second(z, fiber_dir, 0.0, -*cert.fiber_convexity));
    }
    if (cert.fiber_semiconcavity && m > 0) {
      report.fiber_semiconcavity_max =
          std::max(report.fiber_semiconcavity_max, second(z, fiber_dir, 0.0, -*cert.fiber_semiconcavity));
    }
    if (cert.semiconcavity) {
      report.semiconcavity_max =
          std::max(report.semiconcavity_max, second(z, dir, -*cert.semiconcavity, -*cert.semiconcavity));
    }
    ++report.segments;
  }
  // Normalised by s^2, so tol is a curvature tolerance.
  report.passed = report.convexity_min >= -options.tol && report.fiber_convexity_min >= -options.tol &&
                  report.fiber_semiconcavity_max <= options.tol && report.semiconcavity_max <= options.tol;
  return report;
}

}  // namespace semiconvex
