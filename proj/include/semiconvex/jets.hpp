#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "semiconvex/errors.hpp"
#include "semiconvex/field.hpp"

namespace semiconvex {

// Symmetric matrix with exactly mirrored entries. Construction from an
// arbitrary square matrix keeps its symmetric part (A + A^t) / 2, so feeding an
// already symmetric matrix is the identity.
template <typename Scalar>
class SymMatrix {
 public:
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SymMatrix() = default;
  explicit SymMatrix(Index n) : entries_(Dense::Zero(n, n)) {}

  template <typename Derived>
  explicit SymMatrix(const Eigen::MatrixBase<Derived>& a) {
    if (a.rows() != a.cols()) throw DimensionError("symmetric matrix must be square");
    entries_.resize(a.rows(), a.cols());
    for (Index j = 0; j < a.cols(); ++j) {
      entries_(j, j) = a(j, j);
      for (Index i = 0; i < j; ++i) {
        const Scalar s = (a(i, j) + a(j, i)) / Scalar(2);
        entries_(i, j) = s;
        entries_(j, i) = s;
      }
    }
  }

  static SymMatrix identity(Index n) { return SymMatrix(Dense::Identity(n, n)); }
  static SymMatrix zero(Index n) { return SymMatrix(n); }
  static SymMatrix diagonal(const Vector& d) { return SymMatrix(Dense(d.asDiagonal())); }

  Index dimension() const { return entries_.rows(); }
  Scalar operator()(Index i, Index j) const { return entries_(i, j); }
  const Dense& dense() const { return entries_; }

  // Nondecreasing.
  Vector eigenvalues() const {
    if (dimension() == 0) return Vector(0);
    Eigen::SelfAdjointEigenSolver<Dense> solver(entries_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
  }
  Scalar min_eigenvalue() const { return eigenvalues()(0); }
  Scalar max_eigenvalue() const { return eigenvalues()(dimension() - 1); }
  Scalar trace() const { return entries_.trace(); }
  bool is_positive_semidefinite(Scalar slack = Scalar(0)) const {
    return dimension() == 0 || min_eigenvalue() >= -slack;
  }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    check_same(a, b);
    return SymMatrix(Dense(a.entries_ + b.entries_));
  }
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    check_same(a, b);
    return SymMatrix(Dense(a.entries_ - b.entries_));
  }
  friend SymMatrix operator*(Scalar s, const SymMatrix& a) { return SymMatrix(Dense(s * a.entries_)); }
  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.dimension() == b.dimension() && a.entries_ == b.entries_;
  }

 private:
  static void check_same(const SymMatrix& a, const SymMatrix& b) {
    if (a.dimension() != b.dimension()) throw DimensionError("symmetric matrix dimensions differ");
  }

  Dense entries_;
};

// Second-order jet (value, gradient, Hessian).
template <typename Scalar>
struct Jet2 {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar r{};
  Vector p;
  SymMatrix<Scalar> A;

  Jet2() = default;
  Jet2(Scalar value, Vector gradient, SymMatrix<Scalar> hessian)
      : r(value), p(std::move(gradient)), A(std::move(hessian)) {
    if (p.size() != A.dimension()) throw DimensionError("jet gradient and Hessian dimensions differ");
  }

  Index dimension() const { return p.size(); }

  friend Jet2 operator+(const Jet2& a, const Jet2& b) {
    if (a.dimension() != b.dimension()) throw DimensionError("jet dimensions differ");
    return Jet2(a.r + b.r, a.p + b.p, a.A + b.A);
  }
};

// Partition of R^{n+m} into base (first n) and fiber (last m) coordinates;
// p = (p1, p2) and A = [[B, C], [C^t, D]].
struct BlockSplit {
  Index n = 0;
  Index m = 0;

  Index total() const { return n + m; }

  template <typename Scalar>
  void check(const Jet2<Scalar>& jet) const {
    if (n < 0 || m < 0 || jet.dimension() != n + m)
      throw DimensionError("jet dimension does not match the block split");
  }
  template <typename Scalar>
  auto p1(const Jet2<Scalar>& jet) const { return jet.p.head(n); }
  template <typename Scalar>
  auto p2(const Jet2<Scalar>& jet) const { return jet.p.tail(m); }
  template <typename Scalar>
  auto B(const Jet2<Scalar>& jet) const { return jet.A.dense().topLeftCorner(n, n); }
  template <typename Scalar>
  auto C(const Jet2<Scalar>& jet) const { return jet.A.dense().topRightCorner(n, m); }
  template <typename Scalar>
  auto D(const Jet2<Scalar>& jet) const { return jet.A.dense().bottomRightCorner(m, m); }
};

// Pullback along the graph x -> (x, Gamma x), Gamma an m x n matrix:
// (r, p1 + Gamma^t p2, B + C Gamma + Gamma^t C^t + Gamma^t D Gamma).
template <typename Scalar, typename Derived>
Jet2<Scalar> pullback_slice(const Jet2<Scalar>& jet, const BlockSplit& split,
                            const Eigen::MatrixBase<Derived>& gamma) {
  using Dense = typename SymMatrix<Scalar>::Dense;
  split.check(jet);
  if (gamma.rows() != split.m || gamma.cols() != split.n)
    throw DimensionError("slice matrix must be m x n");
  const Dense g = gamma;
  const Dense c = split.C(jet);
  const Dense d = split.D(jet);
  const Dense cg = c * g;
  Dense hessian = split.B(jet);
  hessian += cg + cg.transpose() + g.transpose() * d * g;
  typename Jet2<Scalar>::Vector grad = split.p1(jet) + g.transpose() * split.p2(jet);
  return Jet2<Scalar>(jet.r, std::move(grad), SymMatrix<Scalar>(hessian));
}

// Restriction to the fiber y -> (0, y): (r, p2, D).
template <typename Scalar>
Jet2<Scalar> pullback_fiber(const Jet2<Scalar>& jet, const BlockSplit& split) {
  split.check(jet);
  using Dense = typename SymMatrix<Scalar>::Dense;
  return Jet2<Scalar>(jet.r, split.p2(jet), SymMatrix<Scalar>(Dense(split.D(jet))));
}

using SymMatrixd = SymMatrix<double>;
using Jet2d = Jet2<double>;

struct JetEstimateOptions {
  double h = 1e-3;
  // Unstable when the max-abs entry of H_h - H_{h/2} exceeds factor * h.
  double stability_factor = 10.0;
};

struct JetEstimate {
  Jet2d jet;             // central differences at step h
  bool unstable = false;
  double disagreement = 0.0;
};

// Central-difference jet with the 4-point cross stencil for mixed partials.
// Requires x inside the field domain with margin 2h.
JetEstimate estimate_jet(const ScalarField& f, const VectorXd& x, const JetEstimateOptions& options = {});

struct ContactOptions {
  double radius = 1e-2;
  int samples = 64;
  std::uint64_t seed = 0;
  double tol = 1e-10;
};

struct ContactResult {
  bool holds = true;
  std::optional<VectorXd> counterexample;
  // max over probes of f(y) - [f(x) + p.(y-x) + 1/2 (y-x)^t A (y-x)]
  double worst_excess = 0.0;
};

// Tests f(y) <= f(x) + p.(y-x) + 1/2 (y-x)^t A (y-x) on a ring of 2n axis
// points and 2n(n-1) diagonal points at `radius`, plus `samples` seeded points
// in the ball.
ContactResult is_upper_contact_jet(const ScalarField& f, const VectorXd& x, const VectorXd& p,
                                   const SymMatrixd& A, const ContactOptions& options = {});

}  // namespace semiconvex
