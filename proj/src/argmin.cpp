#include "semiconvex/argmin.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <string>

#include "semiconvex/errors.hpp"
#include "semiconvex/random.hpp"

namespace semiconvex {
namespace {

VectorXd fiber_gradient(const ScalarField& f, const VectorXd& x, const VectorXd& y) {
  return f.gradient(ScalarField::join(x, y)).tail(f.fiber_dim());
}

MatrixXd fiber_hessian(const ScalarField& f, const VectorXd& x, const VectorXd& y) {
  const Index m = y.size();
  const double h = 1e-4 * (1.0 + y.lpNorm<Eigen::Infinity>());
  MatrixXd hess(m, m);
  VectorXd probe = y;
  for (Index j = 0; j < m; ++j) {
    probe(j) = y(j) + h;
    const VectorXd plus = fiber_gradient(f, x, probe);
    probe(j) = y(j) - h;
    const VectorXd minus = fiber_gradient(f, x, probe);
    probe(j) = y(j);
    hess.col(j) = (plus - minus) / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

double distance_to_faces(const Box& box, const VectorXd& y) {
  double d = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < y.size(); ++i)
    d = std::min({d, y(i) - box.lower()(i), box.upper()(i) - y(i)});
  return d;
}

void require_convex(const ScalarField& f, const char* what) {
  if (!f.certificates().convex())
    throw CertificateError(std::string(what) + " needs '" + f.name() + "' certified convex");
}

}  // namespace

ArgminResult solve_argmin(const ScalarField& f, const VectorXd& x, const ArgminOptions& options) {
  if (x.size() != f.base_dim()) throw DimensionError("base point dimension does not match field");
  const auto& sigma = f.certificates().fiber_convexity;
  if (!sigma || !(*sigma > 0.0))
    throw CertificateError("argmin of '" + f.name() + "' needs a fiber convexity certificate sigma > 0");

  ArgminResult result;
  result.x = x;
  const Index m = f.fiber_dim();
  if (m == 0) {
    result.gamma = VectorXd(0);
    result.g_value = f(x, result.gamma);
    result.converged = true;
    return result;
  }

  const Box fiber = f.fiber_domain();
  VectorXd y = fiber.clamp(options.warm_start ? *options.warm_start : fiber.center());
  double fy = f(x, y);
  VectorXd grad = fiber_gradient(f, x, y);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    if (grad.norm() <= options.tol) {
      result.converged = true;
      result.iterations = iter;
      break;
    }
    VectorXd direction;
    const Eigen::LLT<MatrixXd> llt(fiber_hessian(f, x, y));
    if (llt.info() == Eigen::Success) direction = -llt.solve(grad);
    if (direction.size() == 0 || !direction.allFinite() || direction.dot(grad) >= 0.0) direction = -grad / *sigma;

    bool moved = false;
    for (double t = 1.0; t > 1e-12; t *= 0.5) {
      const VectorXd trial = fiber.clamp(y + t * direction);
      const double ft = f(x, trial);
      const VectorXd gt = fiber_gradient(f, x, trial);
      const double slack = 1e-14 * (1.0 + std::abs(fy));
      if (ft <= fy + 1e-4 * grad.dot(trial - y) + slack || gt.norm() < grad.norm()) {
        moved = (trial - y).norm() > 0.0;
        y = trial;
        fy = ft;
        grad = gt;
        break;
      }
    }
    result.iterations = iter + 1;
    if (!moved) break;
  }
  if (!result.converged && grad.norm() <= options.tol) result.converged = true;

  result.gamma = y;
  result.g_value = fy;
  result.residual = grad.norm();
  if (distance_to_faces(fiber, y) < options.boundary_margin)
    throw DomainError("argmin of '" + f.name() + "' lies within the boundary margin of the fiber box");
  if (!result.converged)
    throw ConvergenceError("argmin of '" + f.name() + "' did not converge (residual " +
                           std::to_string(result.residual) + ")");
  return result;
}

ScalarField marginal_field(const ScalarField& f, const ArgminOptions& options) {
  Certificates cert;
  cert.semiconvexity = f.certificates().semiconvexity;
  cert.sup_norm = f.certificates().sup_norm;
  const ScalarField source = f;
  return ScalarField(
      "marginal(" + f.name() + ")", f.base_dim(), 0, f.base_domain(),
      [source, options](const VectorXd& x) { return solve_argmin(source, x, options).g_value; },
      [source, options](const VectorXd& x) -> VectorXd {
        const ArgminResult r = solve_argmin(source, x, options);
        return source.gradient(ScalarField::join(x, r.gamma)).head(source.base_dim());
      },
      cert);
}

VectorXd functional_J(const ScalarField& f, const ScalarField& g, const VectorXd& x, const VectorXd& u,
                      const VectorXd& y, const ResolventOptions& options) {
  if (g.dimension() != f.base_dim() || x.size() != f.base_dim() || u.size() != f.base_dim() ||
      y.size() != f.fiber_dim())
    throw DimensionError("functional equation arguments do not match the field dimensions");
  const VectorXd v = resolvent_base(g, x + u, options).point + u;
  return y - resolvent_full(f, ScalarField::join(v, y), options).point.tail(f.fiber_dim());
}

SupportVector subdifferential_probe(const ScalarField& g, const VectorXd& x, double kappa,
                                    const ProbeOptions& options) {
  if (g.fiber_dim() != 0 || x.size() != g.base_dim()) throw DimensionError("probe expects a base-only field");
  const Index n = x.size();
  auto convexified = [&](const VectorXd& z) { return g(z) + 0.5 * kappa * z.squaredNorm(); };

  SupportVector sv;
  sv.x = x;
  sv.kappa = kappa;
  VectorXd shifted(n);
  const double c0 = convexified(x);
  VectorXd probe = x;
  for (Index i = 0; i < n; ++i) {
    const double h = options.step * (1.0 + std::abs(x(i)));
    auto at = [&](double offset) {
      probe(i) = x(i) + offset;
      const double value = convexified(probe);
      probe(i) = x(i);
      return value;
    };
    const double p1 = at(h), p2 = at(2.0 * h), m1 = at(-h), m2 = at(-2.0 * h);
    const double forward = (-3.0 * c0 + 4.0 * p1 - p2) / (2.0 * h);
    const double backward = (3.0 * c0 - 4.0 * m1 + m2) / (2.0 * h);
    if (std::abs(forward - backward) > options.kink_tol) {
      sv.nonsmooth = true;
      const double lo = std::min(forward, backward), hi = std::max(forward, backward);
      shifted(i) = lo > 0.0 ? lo : (hi < 0.0 ? hi : 0.0);
    } else {
      shifted(i) = (p1 - m1) / (2.0 * h);
    }
  }
  sv.u = shifted - kappa * x;

  const double g0 = g(x);
  const Box& box = g.domain();
  Rng rng(options.seed);
  sv.worst_slack = std::numeric_limits<double>::infinity();
  for (int k = 0; k < options.samples; ++k) {
    const VectorXd xp = box.clamp(x + rng.in_ball(n, options.radius));
    const VectorXd d = xp - x;
    const double slack = g(xp) - g0 - sv.u.dot(d) + 0.5 * kappa * d.squaredNorm();
    sv.worst_slack = std::min(sv.worst_slack, slack);
  }
  if (sv.worst_slack < -options.tol)
    throw CertificateError("support inequality fails for '" + g.name() + "' (slack " +
                           std::to_string(sv.worst_slack) + ")");
  return sv;
}

FunctionalEquationReport verify_functional_equation(const ScalarField& f, const ScalarField& g,
                                                    const std::vector<VectorXd>& grid,
                                                    const FunctionalEquationOptions& options) {
  require_convex(f, "functional equation");
  FunctionalEquationReport report;
  for (const VectorXd& x : grid) {
    const VectorXd u = subdifferential_probe(g, x, 0.0, options.probe).u;
    const VectorXd gamma = solve_argmin(f, x, options.argmin).gamma;
    const double r = functional_J(f, g, x, u, gamma, options.resolvent).norm();
    report.points.push_back(x);
    report.residuals.push_back(r);
    report.max_residual = std::max(report.max_residual, r);
  }
  report.passed = report.max_residual <= options.tol;
  return report;
}

FixedPointResult solve_J_fixed_point(const ScalarField& f, const ScalarField& g, const VectorXd& x,
                                     const VectorXd& u, const VectorXd& y0, const FixedPointOptions& options) {
  require_convex(f, "fixed-point solve");
  const auto& sigma = f.certificates().fiber_convexity;
  if (!sigma || !(*sigma > 0.0)) throw CertificateError("fixed-point solve needs sigma > 0");
  if (y0.size() != f.fiber_dim() || x.size() != f.base_dim() || u.size() != f.base_dim())
    throw DimensionError("fixed-point arguments do not match the field dimensions");

  FixedPointResult result;
  result.mu = contraction_mu(*sigma);
  const VectorXd v = resolvent_base(g, x + u, options.resolvent).point + u;
  auto step = [&](const VectorXd& y) {
    return VectorXd(resolvent_full(f, ScalarField::join(v, y), options.resolvent).point.tail(f.fiber_dim()));
  };
  const double ratio_floor = 1e6 * options.resolvent.tol;

  VectorXd y = y0;
  double previous = -1.0;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const VectorXd next = step(y);
    const double move = (next - y).norm();
    if (move <= options.tol) {
      // y0 already fixed counts as zero iterations
      result.y = iter == 0 ? y : next;
      result.iterations = iter;
      result.converged = true;
      return result;
    }
    if (previous > ratio_floor && move > ratio_floor) {
      const double ratio = move / previous;
      result.ratios.push_back(ratio);
      if (ratio > result.mu + options.tol)
        throw CertificateError("contraction ratio " + std::to_string(ratio) + " exceeds mu = " +
                               std::to_string(result.mu));
    }
    previous = move;
    y = next;
  }
  throw ConvergenceError("fixed-point iteration did not converge within the iteration budget");
}

TildeShift tilde_shift(const ScalarField& f) {
  const auto& cert = f.certificates();
  if (!cert.semiconvexity) throw CertificateError("tilde shift needs a semiconvexity certificate");
  const double kappa = std::max(0.0, *cert.semiconvexity);
  if (kappa == 0.0) return TildeShift{f, 0.0};

  const Index n = f.base_dim();
  Certificates shifted = cert;
  shifted.semiconvexity = 0.0;
  if (cert.semiconcavity) shifted.semiconcavity = *cert.semiconcavity + kappa;
  if (cert.sup_norm) shifted.sup_norm = *cert.sup_norm + 0.5 * kappa * f.base_domain().max_norm() *
                                                              f.base_domain().max_norm();
  shifted.lipschitz.reset();
  const ScalarField source = f;
  ScalarField::GradientFn gradient = [source, kappa, n](const VectorXd& z) -> VectorXd {
    VectorXd grad = source.gradient(z);
    grad.head(n) += kappa * z.head(n);
    return grad;
  };
  ScalarField field(
      source.name() + "~", n, f.fiber_dim(), f.domain(),
      [source, kappa, n](const VectorXd& z) { return source(z) + 0.5 * kappa * z.head(n).squaredNorm(); },
      gradient, shifted);
  return TildeShift{field, kappa};
}

ScalarField shift_base(const ScalarField& g, double kappa) {
  if (kappa == 0.0) return g;
  Certificates cert = g.certificates();
  if (cert.semiconvexity) cert.semiconvexity = *cert.semiconvexity - kappa;
  if (cert.semiconcavity) cert.semiconcavity = *cert.semiconcavity + kappa;
  if (cert.sup_norm) cert.sup_norm = *cert.sup_norm + 0.5 * kappa * g.domain().max_norm() * g.domain().max_norm();
  cert.lipschitz.reset();
  const ScalarField source = g;
  return ScalarField(
      g.name() + "~", g.base_dim(), 0, g.domain(),
      [source, kappa](const VectorXd& x) { return source(x) + 0.5 * kappa * x.squaredNorm(); },
      [source, kappa](const VectorXd& x) -> VectorXd { return source.gradient(x) + kappa * x; }, cert);
}

FixedPointResult argmin_by_fixed_point(const ScalarField& f, const ScalarField& g, const VectorXd& x,
                                       const VectorXd& u, const VectorXd& y0, const FixedPointOptions& options) {
  const TildeShift shift = tilde_shift(f);
  return solve_J_fixed_point(shift.field, shift_base(g, shift.kappa), x, shift.to_shifted(x, u), y0, options);
}

CalmnessReport calmness_scan(const ScalarField& f, const std::vector<VectorXd>& grid,
                             const CalmnessOptions& options) {
  std::vector<double> radii = options.radii;
  if (radii.empty()) radii = {options.grid_step / 2.0, options.grid_step / 4.0};
  std::sort(radii.begin(), radii.end(), std::greater<>());
  const double fine = radii.back();
  const double coarse = radii.size() > 1 ? radii[radii.size() - 2] : fine;
  const double threshold = options.flag_factor * options.grid_step;
  const Box base = f.base_domain();
  const Index n = f.base_dim();
  const Index m = f.fiber_dim();

  CalmnessReport report;
  Rng rng(options.seed);
  for (const VectorXd& x0 : grid) {
    CalmnessPoint point;
    point.x = x0;
    point.gamma = solve_argmin(f, x0, options.argmin).gamma;
    auto gamma_at = [&](const VectorXd& x) {
      ArgminOptions opt = options.argmin;
      opt.warm_start = point.gamma;
      return solve_argmin(f, x, opt).gamma;
    };
    auto ratio = [&](const VectorXd& x, const VectorXd& gx) {
      point.constant = std::max(point.constant, (gx - point.gamma).norm() / (x - x0).norm());
    };

    point.jacobian = MatrixXd::Zero(m, n);
    for (Index i = 0; i < n; ++i) {
      std::vector<VectorXd> central;
      for (double r : radii) {
        const VectorXd xp = x0 + r * VectorXd::Unit(n, i);
        const VectorXd xm = x0 - r * VectorXd::Unit(n, i);
        if (!base.contains(xp) || !base.contains(xm)) continue;
        const VectorXd gp = gamma_at(xp);
        const VectorXd gm = gamma_at(xm);
        ratio(xp, gp);
        ratio(xm, gm);
        if (r == fine) {
          const VectorXd forward = (gp - point.gamma) / r;
          const VectorXd backward = (point.gamma - gm) / r;
          point.secant_gap = std::max(point.secant_gap, (forward - backward).norm());
          point.jacobian.col(i) = (gp - gm) / (2.0 * r);
        }
        if (r == fine || r == coarse) central.push_back((gp - gm) / (2.0 * r));
      }
      if (central.size() == 2) point.secant_gap = std::max(point.secant_gap, (central[0] - central[1]).norm());
    }
    for (int k = 0; k < options.random_samples; ++k) {
      const VectorXd x = x0 + rng.in_ball(n, radii.front());
      if (!base.contains(x) || x == x0) continue;
      ratio(x, gamma_at(x));
    }
    point.flagged = point.secant_gap > threshold;
    report.max_constant = std::max(report.max_constant, point.constant);
    report.points.push_back(point);
  }
  if (!report.points.empty()) {
    const auto flagged = std::count_if(report.points.begin(), report.points.end(),
                                       [](const CalmnessPoint& p) { return p.flagged; });
    report.flagged_fraction = static_cast<double>(flagged) / static_cast<double>(report.points.size());
  }
  return report;
}

std::vector<VectorXd> regular_grid(const VectorXd& lower, const VectorXd& upper, int per_axis) {
  if (lower.size() != upper.size()) throw DimensionError("grid bounds differ in dimension");
  if (per_axis < 1) throw PreconditionError("grid needs at least one point per axis");
  const Index n = lower.size();
  std::vector<VectorXd> grid;
  std::vector<int> index(static_cast<std::size_t>(n), 0);
  for (;;) {
    VectorXd x(n);
    for (Index i = 0; i < n; ++i) {
      const double t = per_axis == 1 ? 0.5 : static_cast<double>(index[static_cast<std::size_t>(i)]) / (per_axis - 1);
      x(i) = lower(i) + t * (upper(i) - lower(i));
    }
    grid.push_back(x);
    Index i = 0;
    while (i < n && ++index[static_cast<std::size_t>(i)] == per_axis) index[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
  return grid;
}

}  // namespace semiconvex
