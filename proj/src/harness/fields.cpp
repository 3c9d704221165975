#include "semiconvex/harness/fields.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "semiconvex/errors.hpp"
#include "semiconvex/random.hpp"

namespace semiconvex {
namespace {

using nlohmann::json;

template <typename T>
T param(const json& params, const char* key, T fallback) {
  if (!params.is_object() || !params.contains(key)) return fallback;
  try {
    return params.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field parameter '") + key + "': " + e.what());
  }
}

MatrixXd matrix_param(const json& params, const char* key, Index rows, Index cols) {
  if (!params.contains(key)) throw ConfigError(std::string("field parameter '") + key + "' is required");
  const json& value = params.at(key);
  MatrixXd out(rows, cols);
  try {
    if (rows == 1 || cols == 1) {
      // vectors may be given flat
      if (value.is_array() && value.size() == static_cast<std::size_t>(rows * cols) &&
          (value.empty() || value[0].is_number())) {
        for (Index i = 0; i < rows * cols; ++i) out(i / cols, i % cols) = value[static_cast<std::size_t>(i)];
        return out;
      }
    }
    if (!value.is_array() || value.size() != static_cast<std::size_t>(rows)) throw ConfigError("");
    for (Index i = 0; i < rows; ++i) {
      const json& row = value[static_cast<std::size_t>(i)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(cols)) throw ConfigError("");
      for (Index j = 0; j < cols; ++j) out(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  } catch (const std::exception&) {
    char msg[128];
    std::snprintf(msg, sizeof msg, "field parameter '%s' must be a %ldx%ld matrix", key, static_cast<long>(rows),
                  static_cast<long>(cols));
    throw ConfigError(msg);
  }
  return out;
}

VectorXd vector_param(const json& params, const char* key, Index size, const VectorXd& fallback) {
  if (!params.contains(key)) return fallback;
  return matrix_param(params, key, size, 1).col(0);
}

Index dim_param(const json& params, const char* key, Index fallback, Index minimum) {
  const long value = param<long>(params, key, static_cast<long>(fallback));
  if (value < minimum || value > 8) throw ConfigError(std::string("field parameter '") + key + "' out of range");
  return static_cast<Index>(value);
}

Subequation subequation_param(const json& params, Index n) {
  json spec = params.is_object() && params.contains("subequation") ? params.at("subequation") : json::object();
  const std::string name = param<std::string>(spec, "name", "trace");
  const std::vector<double> values = param<std::vector<double>>(spec, "params", {});
  return catalog(name, n, values);
}

double min_eigenvalue(const MatrixXd& a) { return Eigen::SelfAdjointEigenSolver<MatrixXd>(a).eigenvalues()(0); }
double max_eigenvalue(const MatrixXd& a) {
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(a).eigenvalues()(a.rows() - 1);
}
double spectral_norm(const MatrixXd& a) {
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(a).eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXd schur_complement(const MatrixXd& a, Index n, Index m) {
  return a.topLeftCorner(n, n) - a.topRightCorner(n, m) * a.bottomRightCorner(m, m).ldlt().solve(
                                                               a.topRightCorner(n, m).transpose());
}

MatrixXd assemble(const MatrixXd& b, const MatrixXd& c, const MatrixXd& d) {
  const Index n = b.rows(), m = d.rows();
  MatrixXd a(n + m, n + m);
  a << b, c, c.transpose(), d;
  return a;
}

GeneratedField block_quadratic(const json& params, std::uint64_t seed, bool with_cosine) {
  const Index n = dim_param(params, "n", 2, 1);
  const Index m = dim_param(params, "m", 1, 1);
  const double half = param<double>(params, "box", 2.5);
  if (!(half > 0.0)) throw ConfigError("field parameter 'box' must be positive");
  const Subequation F = subequation_param(params, n);
  const std::string control = param<std::string>(params, "control", "positive");

  MatrixXd b, c, d;
  if (control == "explicit") {
    b = matrix_param(params, "B", n, n);
    c = matrix_param(params, "C", n, m);
    d = matrix_param(params, "D", m, m);
    b = 0.5 * (b + b.transpose());
    d = 0.5 * (d + d.transpose());
  } else if (control == "positive" || control == "negative") {
    const double margin = param<double>(params, "margin", control == "positive" ? 0.1 : 0.5);
    const double scale = param<double>(params, "scale", 0.5);
    if (!(margin > 0.0) || !(scale > 0.0)) throw ConfigError("margin and scale must be positive");
    Rng rng(seed);
    c = scale * rng.normal_matrix(n, m);
    const MatrixXd r = rng.normal_matrix(m, m);
    d = scale * r.transpose() * r + MatrixXd::Identity(m, m);
    const MatrixXd g = rng.normal_matrix(n, n);
    const SymMatrixd s0(MatrixXd(0.5 * scale * (g + g.transpose())));
    const double shift = F.membership_shift(s0) + (control == "positive" ? margin : -margin);
    const MatrixXd s = s0.dense() + shift * MatrixXd::Identity(n, n);
    b = s + c * d.ldlt().solve(c.transpose());
    b = 0.5 * (b + b.transpose());
  } else {
    throw ConfigError("unknown block-quadratic control '" + control + "'");
  }
  if (min_eigenvalue(d) <= 0.0) throw ConfigError("block-quadratic needs a positive definite fiber block D");

  const MatrixXd a = assemble(b, c, d);
  const VectorXd lin = vector_param(params, "b", n + m, VectorXd::Zero(n + m));

  double amplitude = 0.0;
  VectorXd frequency = VectorXd::Zero(n + m);
  if (with_cosine) {
    amplitude = param<double>(params, "amplitude", 0.01);
    frequency = vector_param(params, "frequency", n + m, VectorXd::Ones(n + m));
    if (amplitude < 0.0) throw ConfigError("cosine amplitude must be nonnegative");
  }
  const double bound = amplitude * frequency.squaredNorm();

  FieldInfo info;
  info.family = with_cosine ? "quadratic-plus-cosine" : "block-quadratic";
  info.base_dim = n;
  info.fiber_dim = m;
  info.hessian = a;
  info.schur = schur_complement(a, n, m);
  info.schur_member = F.contains(SymMatrixd(*info.schur));
  info.margin = product_margin(F, a, n, m);
  info.verdict = product_membership(F, BlockSplit{n, m}, Jet2d(0.0, VectorXd::Zero(n + m), SymMatrixd(a)));
  if (with_cosine && *info.margin - bound < 0.0) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "cosine perturbation bound %.6g exceeds the membership margin %.6g", bound,
                  *info.margin);
    throw ConfigError(msg);
  }

  // certificates from the Hessian lower bound A - bound I
  const MatrixXd low = a - bound * MatrixXd::Identity(n + m, n + m);
  const double sigma = 0.5 * min_eigenvalue(low.bottomRightCorner(m, m));
  if (!(sigma > 0.0)) throw ConfigError("perturbation destroys fiber convexity");
  const MatrixXd shifted_d = low.bottomRightCorner(m, m) - sigma * MatrixXd::Identity(m, m);
  const MatrixXd low_schur =
      low.topLeftCorner(n, n) - low.topRightCorner(n, m) * shifted_d.ldlt().solve(low.topRightCorner(n, m).transpose());
  const double radius = Box::cube(n + m, half).max_norm();

  Certificates cert;
  cert.fiber_convexity = sigma;
  cert.semiconvexity = std::max(0.0, -min_eigenvalue(low_schur));
  cert.semiconcavity = std::max(0.0, max_eigenvalue(a) + bound);
  cert.fiber_semiconcavity = max_eigenvalue(d) + bound;
  cert.sup_norm = 0.5 * spectral_norm(a) * radius * radius + lin.norm() * radius + amplitude;
  cert.lipschitz = spectral_norm(a) * radius + lin.norm() + amplitude * frequency.norm();

  ScalarField field(
      info.family, n, m, Box::cube(n + m, half),
      [a, lin, amplitude, frequency](const VectorXd& z) {
        return 0.5 * z.dot(a * z) + lin.dot(z) + amplitude * std::cos(frequency.dot(z));
      },
      [a, lin, amplitude, frequency](const VectorXd& z) -> VectorXd {
        return a * z + lin - amplitude * std::sin(frequency.dot(z)) * frequency;
      },
      cert);
  return {field, info};
}

GeneratedField kinked_base(const json& params) {
  const Index n = dim_param(params, "n", 1, 1);
  const double weight = param<double>(params, "weight", 1.0);
  const double slope = param<double>(params, "slope", 1.0);
  const double sigma = param<double>(params, "sigma", 1.0);
  const double half = param<double>(params, "box", 3.0);
  if (!(weight > 0.0) || !(sigma >= 0.0) || !(half > 0.0)) throw ConfigError("kinked-base parameters out of range");

  FieldInfo info;
  info.family = "kinked-base";
  info.base_dim = n;
  info.fiber_dim = 1;
  const double rx = Box::cube(n, half).max_norm();
  Certificates cert;
  cert.fiber_convexity = 2.0 * weight + sigma;
  cert.fiber_semiconcavity = 2.0 * weight + sigma;
  cert.sup_norm = weight * (half + std::abs(slope) * rx) * (half + std::abs(slope) * rx) + 0.5 * sigma * half * half;
  ScalarField field(
      info.family, n, 1, Box::cube(n + 1, half),
      [n, weight, slope, sigma](const VectorXd& z) {
        const double y = z(n);
        const double d = y - slope * z.head(n).norm();
        return weight * d * d + 0.5 * sigma * y * y;
      },
      [n, weight, slope, sigma](const VectorXd& z) -> VectorXd {
        const double y = z(n);
        const double r = z.head(n).norm();
        const double d = y - slope * r;
        VectorXd grad(n + 1);
        grad.head(n) = r > 0.0 ? VectorXd(-2.0 * weight * d * slope * z.head(n) / r) : VectorXd::Zero(n);
        grad(n) = 2.0 * weight * d + sigma * y;
        return grad;
      },
      cert);
  return {field, info};
}

GeneratedField fiber_quadratic(const json& params) {
  const Index k = dim_param(params, "dim", 1, 1);
  const double sigma = param<double>(params, "sigma", 1.0);
  const double half = param<double>(params, "box", 5.0);
  if (!(sigma > 0.0) || !(half > 0.0)) throw ConfigError("fiber-quadratic needs sigma > 0 and box > 0");
  const MatrixXd id = MatrixXd::Identity(k, k);
  const MatrixXd a = assemble(id, -id, (1.0 + sigma) * id);

  FieldInfo info;
  info.family = "fiber-quadratic";
  info.base_dim = k;
  info.fiber_dim = k;
  info.hessian = a;
  info.schur = sigma / (1.0 + sigma) * id;
  const double radius = Box::cube(2 * k, half).max_norm();
  Certificates cert;
  cert.semiconvexity = 0.0;
  cert.fiber_convexity = sigma;
  cert.semiconcavity = max_eigenvalue(a);
  cert.fiber_semiconcavity = 1.0 + sigma;
  cert.sup_norm = 0.5 * max_eigenvalue(a) * radius * radius;
  cert.lipschitz = max_eigenvalue(a) * radius;
  ScalarField field(
      info.family, k, k, Box::cube(2 * k, half), [a](const VectorXd& z) { return 0.5 * z.dot(a * z); },
      [a](const VectorXd& z) -> VectorXd { return a * z; }, cert);
  return {field, info};
}

GeneratedField zero_family(const json& params) {
  const Index n = dim_param(params, "n", 2, 1);
  const Index m = dim_param(params, "m", 1, 0);
  const double half = param<double>(params, "box", 2.5);
  FieldInfo info;
  info.family = "zero";
  info.base_dim = n;
  info.fiber_dim = m;
  info.hessian = MatrixXd::Zero(n + m, n + m);
  Certificates cert;
  cert.semiconvexity = 0.0;
  cert.fiber_convexity = 0.0;
  cert.semiconcavity = 0.0;
  cert.fiber_semiconcavity = 0.0;
  cert.sup_norm = 0.0;
  cert.lipschitz = 0.0;
  ScalarField field(
      info.family, n, m, Box::cube(n + m, half), [](const VectorXd&) { return 0.0; },
      [](const VectorXd& z) -> VectorXd { return VectorXd::Zero(z.size()); }, cert);
  return {field, info};
}

}  // namespace

double product_margin(const Subequation& F, const MatrixXd& hessian, Index n, Index m) {
  const MatrixXd d = hessian.bottomRightCorner(m, m);
  const double ceiling = min_eigenvalue(d);
  if (!(ceiling > 0.0)) throw PreconditionError("product margin needs a positive definite fiber block");
  auto member = [&](double s) {
    const MatrixXd shifted = hessian - s * MatrixXd::Identity(n + m, n + m);
    return F.contains(SymMatrixd(schur_complement(shifted, n, m)));
  };
  double lo, hi;
  if (member(0.0)) {
    lo = 0.0;
    hi = ceiling * (1.0 - 1e-12);
    if (member(hi)) return hi;
  } else {
    hi = 0.0;
    lo = -1.0;
    while (!member(lo)) {
      lo *= 2.0;
      if (lo < -1e12) return -std::numeric_limits<double>::infinity();
    }
  }
  while (hi - lo > 1e-12 * (1.0 + std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    (member(mid) ? lo : hi) = mid;
  }
  return lo;
}

GeneratedField generate_field(const std::string& family, const nlohmann::json& params, std::uint64_t seed) {
  if (!params.is_null() && !params.is_object()) throw ConfigError("field parameters must be an object");
  const json p = params.is_null() ? json::object() : params;
  if (family == "block-quadratic") return block_quadratic(p, seed, false);
  if (family == "quadratic-plus-cosine") return block_quadratic(p, seed, true);
  if (family == "kinked-base") return kinked_base(p);
  if (family == "fiber-quadratic") return fiber_quadratic(p);
  if (family == "zero") return zero_family(p);
  throw ConfigError("unknown field family '" + family + "'");
}

ScalarField regularize_j(const ScalarField& f, double j) {
  if (std::isinf(j) && j > 0.0) return f;
  if (!(j >= 1.0)) throw PreconditionError("regularization index j must be >= 1");
  const double w = 1.0 / j;
  const Index n = f.base_dim();
  const Index m = f.fiber_dim();
  const double ry = f.fiber_domain().max_norm();
  Certificates cert = f.certificates();
  if (cert.fiber_convexity) *cert.fiber_convexity += 2.0 * w;
  if (cert.fiber_semiconcavity) *cert.fiber_semiconcavity += 2.0 * w;
  if (cert.semiconcavity) *cert.semiconcavity += 2.0 * w;
  if (cert.sup_norm) *cert.sup_norm += w * ry * ry;
  if (cert.lipschitz) *cert.lipschitz += 2.0 * w * ry;

  char label[64];
  std::snprintf(label, sizeof label, "[j=%g]", j);
  const ScalarField source = f;
  return ScalarField(
      f.name() + label, n, m, f.domain(),
      [source, w, m](const VectorXd& z) { return source(z) + w * z.tail(m).squaredNorm(); },
      [source, w, m](const VectorXd& z) -> VectorXd {
        VectorXd grad = source.gradient(z);
        grad.tail(m) += 2.0 * w * z.tail(m);
        return grad;
      },
      cert);
}

}  // namespace semiconvex
