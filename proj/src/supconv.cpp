#include "semiconvex/supconv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "semiconvex/errors.hpp"
#include "semiconvex/random.hpp"

namespace semiconvex {
namespace {

using LatticeKey = std::vector<long long>;

struct LatticeHash {
  std::size_t operator()(const LatticeKey& key) const {
    std::size_t h = 1469598103934665603ull;
    for (long long k : key) h = (h ^ static_cast<std::size_t>(k)) * 1099511628211ull;
    return h;
  }
};

std::optional<LatticeKey> lattice_key(const VectorXd& z, double step) {
  LatticeKey key(static_cast<std::size_t>(z.size()));
  for (Index i = 0; i < z.size(); ++i) {
    const double scaled = z(i) / step;
    if (!(std::abs(scaled) < 0x1p52) || scaled != std::nearbyint(scaled)) return std::nullopt;
    key[static_cast<std::size_t>(i)] = static_cast<long long>(scaled);
  }
  return key;
}

struct EvalCache {
  mutable std::shared_mutex mutex;
  mutable std::unordered_map<LatticeKey, SupConvField::Evaluation, LatticeHash> table;
};

}  // namespace

double localization_radius(double epsilon, double sup_norm) {
  if (!(epsilon > 0.0)) throw PreconditionError("sup-convolution needs epsilon > 0");
  if (!(sup_norm >= 0.0)) throw PreconditionError("sup norm bound must be nonnegative");
  return 2.0 * std::sqrt(epsilon * sup_norm);
}

struct SupConvField::Impl {
  ScalarField source;
  double epsilon = 0.0;
  double delta = 0.0;
  SupConvOptions options;
  bool single_start = false;
  EvalCache cache;

  Evaluation compute(const VectorXd& z) const;
  Evaluation evaluate(const VectorXd& z) const;
};

SupConvField::Evaluation SupConvField::Impl::compute(const VectorXd& z) const {
  const Index n = source.base_dim();
  const Index m = source.fiber_dim();
  const VectorXd x = z.head(n);
  const VectorXd y = z.tail(m);
  const Box base = source.base_domain();
  if (!base.contains(x)) throw DomainError("sup-convolution evaluated outside the source base box");

  auto project = [&](const VectorXd& shift) -> VectorXd { return base.clamp(x + shift) - x; };
  auto objective = [&](const VectorXd& shift) {
    return source(ScalarField::join(x + shift, y)) - 0.5 * shift.squaredNorm() / epsilon;
  };
  auto ascent = [&](const VectorXd& shift) -> VectorXd {
    return source.gradient(ScalarField::join(x + shift, y)).head(n) - shift / epsilon;
  };

  std::vector<VectorXd> starts{VectorXd::Zero(n)};
  if (!single_start) {
    for (Index i = 0; i < n; ++i) {
      starts.push_back(project(0.5 * delta * VectorXd::Unit(n, i)));
      starts.push_back(project(-0.5 * delta * VectorXd::Unit(n, i)));
    }
  }

  Evaluation best;
  best.value = -std::numeric_limits<double>::infinity();
  for (const VectorXd& start : starts) {
    VectorXd shift = start;
    double value = objective(shift);
    double step = epsilon;
    double best_move = std::numeric_limits<double>::infinity();
    int stale = 0;
    int iter = 0;
    bool converged = false;
    for (; iter < options.max_iter; ++iter) {
      const VectorXd grad = ascent(shift);
      const VectorXd candidate = project(shift + step * grad);
      const VectorXd move_vec = candidate - shift;
      const double cand_value = objective(candidate);
      const double model = value + grad.dot(move_vec) - 0.5 * move_vec.squaredNorm() / step;
      if (cand_value < model - 1e-15 * (1.0 + std::abs(value))) {
        step *= 0.5;
        if (step < 1e-30 * epsilon) break;
        continue;
      }
      const double move = move_vec.norm();
      shift = candidate;
      value = cand_value;
      step = std::min(epsilon, 2.0 * step);
      if (move <= options.tol) {
        converged = true;
        break;
      }
      // finite-difference gradients leave a noise floor above tol
      if (move < best_move) {
        best_move = move;
        stale = 0;
      } else if (++stale >= 10 && best_move <= 1e-8) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw ConvergenceError("sup-convolution inner ascent did not converge for '" + source.name() + "'");
    if (value > best.value) {
      best.value = value;
      best.shift = shift;
      best.iterations = iter;
    }
  }
  best.gradient.resize(n + m);
  best.gradient.head(n) = best.shift / epsilon;
  best.gradient.tail(m) = source.gradient(ScalarField::join(x + best.shift, y)).tail(m);
  best.localized = best.shift.norm() < delta;
  return best;
}

SupConvField::Evaluation SupConvField::Impl::evaluate(const VectorXd& z) const {
  if (z.size() != source.dimension()) throw DimensionError("sup-convolution argument has the wrong dimension");
  std::optional<LatticeKey> key;
  if (options.memoize) key = lattice_key(z, options.lattice_step);
  if (key) {
    std::shared_lock lock(cache.mutex);
    const auto it = cache.table.find(*key);
    if (it != cache.table.end()) return it->second;
  }
  Evaluation result = compute(z);
  if (key) {
    std::unique_lock lock(cache.mutex);
    cache.table.emplace(*key, result);
  }
  return result;
}

SupConvField::SupConvField(ScalarField source, double epsilon, SupConvOptions options)
    : impl_(std::make_shared<Impl>()) {
  const Certificates& cert = source.certificates();
  if (!cert.sup_norm) throw CertificateError("sup-convolution of '" + source.name() + "' needs a sup-norm bound");
  impl_->delta = localization_radius(epsilon, *cert.sup_norm);
  impl_->epsilon = epsilon;
  impl_->options = options;
  impl_->single_start = cert.semiconcavity && *cert.semiconcavity * epsilon < 1.0;

  Certificates derived;
  derived.sup_norm = cert.sup_norm;
  if (cert.fiber_convexity && *cert.fiber_convexity >= 0.0) {
    derived.semiconvexity = 1.0 / epsilon;
    derived.fiber_convexity = cert.fiber_convexity;
  }
  if (cert.semiconcavity && *cert.semiconcavity * epsilon < 1.0)
    derived.fiber_semiconcavity = std::max(0.0, *cert.semiconcavity);

  char label[64];
  std::snprintf(label, sizeof label, "supconv[%g]", epsilon);
  std::shared_ptr<const Impl> impl = impl_;
  field_ = ScalarField(
      std::string(label) + "(" + source.name() + ")", source.base_dim(), source.fiber_dim(), source.domain(),
      [impl](const VectorXd& z) { return impl->evaluate(z).value; },
      [impl](const VectorXd& z) -> VectorXd { return impl->evaluate(z).gradient; }, derived);
  impl_->source = std::move(source);
}

const ScalarField& SupConvField::source() const { return impl_->source; }
double SupConvField::epsilon() const { return impl_->epsilon; }
double SupConvField::delta() const { return impl_->delta; }

Box SupConvField::localized_base() const { return impl_->source.base_domain().shrunk(impl_->delta); }

bool SupConvField::in_localized_base(const VectorXd& x) const {
  return impl_->source.base_domain().contains(x, impl_->delta);
}

SupConvField::Evaluation SupConvField::evaluate(const VectorXd& z) const { return impl_->evaluate(z); }

std::size_t SupConvField::cache_size() const {
  std::shared_lock lock(impl_->cache.mutex);
  return impl_->cache.table.size();
}

SupConvField partial_sup_convolve(const ScalarField& f, double epsilon, const SupConvOptions& options) {
  return SupConvField(f, epsilon, options);
}

SupConvPropertyReport verify_supconv_properties(const ScalarField& f, const std::vector<double>& epsilons,
                                                const std::vector<VectorXd>& grid,
                                                const SupConvPropertyOptions& options) {
  if (epsilons.empty()) throw PreconditionError("property sweep needs at least one epsilon");
  for (std::size_t k = 1; k < epsilons.size(); ++k)
    if (!(epsilons[k] < epsilons[k - 1])) throw PreconditionError("epsilon list must be strictly decreasing");

  SupConvPropertyReport report;
  report.epsilons = epsilons;
  std::vector<SupConvField> convolved;
  for (double eps : epsilons) {
    convolved.push_back(partial_sup_convolve(f, eps, options.supconv));
    report.deltas.push_back(convolved.back().delta());
  }

  std::vector<std::vector<double>> values(epsilons.size());
  std::vector<double> source_values;
  for (const VectorXd& z : grid) source_values.push_back(f(z));
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    double distance = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const SupConvField::Evaluation e = convolved[k].evaluate(grid[p]);
      values[k].push_back(e.value);
      distance = std::max(distance, std::abs(e.value - source_values[p]));
      report.max_shift_over_delta =
          std::max(report.max_shift_over_delta, report.deltas[k] > 0.0 ? e.shift.norm() / report.deltas[k] : 0.0);
      if (!e.localized) report.localization_ok = false;
    }
    report.distance_to_source.push_back(distance);
  }

  for (std::size_t p = 0; p < grid.size(); ++p) {
    report.ordering_violation = std::max(report.ordering_violation, source_values[p] - values.back()[p]);
    for (std::size_t k = 1; k < epsilons.size(); ++k)
      report.ordering_violation = std::max(report.ordering_violation, values[k][p] - values[k - 1][p]);
  }
  report.ordering_ok = report.ordering_violation <= options.tol;
  for (std::size_t k = 1; k < epsilons.size(); ++k)
    if (report.distance_to_source[k] > report.distance_to_source[k - 1] + options.tol) report.convergence_ok = false;

  const auto& sigma = f.certificates().fiber_convexity;
  report.convexity_checked = sigma && *sigma >= 0.0 && !grid.empty();
  report.convexity_min = std::numeric_limits<double>::infinity();
  if (report.convexity_checked) {
    Rng rng(options.seed);
    const Index n = f.base_dim();
    const Box base = f.base_domain();
    for (int s = 0; s < options.segments; ++s) {
      const std::size_t k = static_cast<std::size_t>(s) % epsilons.size();
      const VectorXd& z = grid[static_cast<std::size_t>(rng.next() % grid.size())];
      const VectorXd d = rng.on_sphere(f.dimension(), options.step);
      if (!base.contains((z + d).head(n)) || !base.contains((z - d).head(n))) continue;
      auto h = [&](const VectorXd& w) { return convolved[k](w) + 0.5 * w.head(n).squaredNorm() / epsilons[k]; };
      report.convexity_min = std::min(report.convexity_min, h(z + d) + h(z - d) - 2.0 * h(z));
    }
    report.convexity_ok = report.convexity_min >= -options.tol;
  }
  return report;
}

ScalarField build_f_epsilon(const ScalarField& f, double epsilon, const SupConvOptions& options) {
  const Certificates& cert = f.certificates();
  if (!cert.semiconcavity) throw CertificateError("f_epsilon needs a semiconcavity certificate on '" + f.name() + "'");
  if (!cert.fiber_convexity || *cert.fiber_convexity < 0.0)
    throw CertificateError("f_epsilon needs a fiber convexity certificate on '" + f.name() + "'");
  if (!(epsilon > 0.0)) throw PreconditionError("f_epsilon needs epsilon > 0");
  const double kappa = std::max(0.0, *cert.semiconcavity);
  if (kappa * epsilon >= 1.0) throw PreconditionError("f_epsilon needs epsilon < 1 / kappa");

  const SupConvField convolved = partial_sup_convolve(f, epsilon, options);
  const Index n = f.base_dim();
  const Index m = f.fiber_dim();
  const double fiber_radius = f.fiber_domain().max_norm();

  Certificates out;
  out.semiconvexity = 1.0 / epsilon;
  out.fiber_convexity = epsilon;
  out.fiber_semiconcavity = kappa + epsilon;
  out.sup_norm = *cert.sup_norm + 0.5 * epsilon * fiber_radius * fiber_radius;

  char label[64];
  std::snprintf(label, sizeof label, "f_eps[%g]", epsilon);
  return ScalarField(
      std::string(label) + "(" + f.name() + ")", n, m, f.domain(),
      [convolved, m, epsilon](const VectorXd& z) { return convolved(z) + 0.5 * epsilon * z.tail(m).squaredNorm(); },
      [convolved, m, epsilon](const VectorXd& z) -> VectorXd {
        VectorXd grad = convolved.evaluate(z).gradient;
        grad.tail(m) += epsilon * z.tail(m);
        return grad;
      },
      out);
}

FiberSemiconcavityReport verify_fiber_semiconcavity(const ScalarField& field, double kappa2,
                                                    const FiberSemiconcavityOptions& options,
                                                    std::optional<Box> region) {
  const Index n = field.base_dim();
  const Index m = field.fiber_dim();
  if (m == 0) throw DimensionError("fiber semiconcavity check needs a fiber variable");
  const Box box = region ? *region : field.domain();
  const Box base = box.head(n);
  const Box fiber = box.tail(m).shrunk(options.step);

  FiberSemiconcavityReport report;
  report.worst = -std::numeric_limits<double>::infinity();
  Rng rng(options.seed);
  auto h = [&](const VectorXd& x, const VectorXd& y) { return field(x, y) - 0.5 * kappa2 * y.squaredNorm(); };
  for (int k = 0; k < options.samples; ++k) {
    const VectorXd x = rng.uniform_vector(base.lower(), base.upper());
    const VectorXd y = rng.uniform_vector(fiber.lower(), fiber.upper());
    const VectorXd v = rng.on_sphere(m, rng.uniform(0.5 * options.step, options.step));
    const double second = h(x, y + v) + h(x, y - v) - 2.0 * h(x, y);
    if (second > report.worst) {
      report.worst = second;
      report.witness = ScalarField::join(x, y);
      report.witness_direction = v;
    }
    ++report.samples;
  }
  report.passed = report.worst <= options.tol;
  return report;
}

}  // namespace semiconvex
