#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "semiconvex/jets.hpp"

namespace semiconvex {

// Absolute slack applied to every catalog threshold.
inline constexpr double kMembershipSlack = 1e-10;

// A constant-coefficient primitive subequation F, given by a membership
// predicate on jets plus structural flags. Catalog entries are Hessian-only,
// which also makes them satisfy Negativity vacuously.
class Subequation {
 public:
  using Predicate = std::function<bool(const Jet2d&)>;
  // Exact F#P membership for a jet on R^{n+m} split as (n, m).
  using ProductReducer = std::function<bool(const Jet2d&, const BlockSplit&)>;

  struct Flags {
    bool constant_coefficient = true;
    bool hessian_only = true;
    bool has_negativity = true;
  };

  Subequation(std::string name, Index dimension, Predicate membership, Flags flags,
              ProductReducer reducer = {});

  const std::string& name() const { return name_; }
  Index dimension() const { return dimension_; }
  const Flags& flags() const { return flags_; }
  bool has_product_reducer() const { return static_cast<bool>(reducer_); }

  bool contains(const Jet2d& jet) const;
  bool contains(const SymMatrixd& hessian) const;
  std::optional<bool> reduce_product(const Jet2d& jet, const BlockSplit& split) const;

  // Smallest t (up to `tol`) with A + t I in F, found by bisection. Exists for
  // every subequation with Positivity whose Hessian part is nonempty.
  double membership_shift(const SymMatrixd& hessian, double tol = 1e-12) const;

 private:
  std::string name_;
  Index dimension_;
  Predicate membership_;
  Flags flags_;
  ProductReducer reducer_;
};

// Names: "P" (A semipositive), "trace" (tr A >= theta), "eig-k" (k-th smallest
// eigenvalue >= theta, non-convex for k >= 2), "shifted-min" (lambda_min >= -c).
// parameters: theta for trace and eig-k, c for shifted-min; all default to 0.
Subequation catalog(const std::string& name, Index n, const std::vector<double>& parameters = {});

struct PositivityReport {
  bool passed = true;
  int trials = 0;
  std::optional<SymMatrixd> member_hessian;  // witness A with A in F
  std::optional<SymMatrixd> added;           // witness P with A + P not in F
};

// Samples member jets and semipositive P (fixed I, 10 I plus random Gram
// matrices) and reports whether A + P stays in F.
PositivityReport check_positivity(const Subequation& F, int trials, std::uint64_t seed);

struct ProductMembershipConfig {
  int gamma_samples = 256;
  double gamma_radius = 10.0;
  std::uint64_t seed = 0;
  bool use_reducer = true;
};

enum class ProductVerdict { member, not_member, member_sampled };

const char* to_string(ProductVerdict verdict);

// Membership in F#P: fiber Hessian semipositive and every slice pullback in F.
// Exact when a reducer is used; otherwise Gamma is sampled (the critical slope
// -D^{-1} C^t, zero, and uniform entries), and a clean sweep is only
// member_sampled.
ProductVerdict product_membership(const Subequation& F, const BlockSplit& split, const Jet2d& jet,
                                  const ProductMembershipConfig& config = {});

struct SumCheck {
  Jet2d sum;
  bool f_member = false;
  bool sum_member = false;
  bool implication_holds = true;  // f_member implies sum_member
};

// Jet-level form of "F-subharmonic plus convex quadratic is F-subharmonic".
SumCheck add_convex_quadratic(const Subequation& F, const Jet2d& f_jet, const Jet2d& q_jet);

}  // namespace semiconvex
