#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "semiconvex/field.hpp"
#include "semiconvex/subequations.hpp"

namespace semiconvex {

struct FieldInfo {
  std::string family;
  Index base_dim = 0;
  Index fiber_dim = 0;
  std::optional<MatrixXd> hessian;  // constant Hessian of the quadratic part
  std::optional<MatrixXd> schur;    // marginal Hessian B - C D^{-1} C^t
  std::optional<ProductVerdict> verdict;
  std::optional<bool> schur_member;  // Schur complement in F
  // Largest s with (Hessian - s I) in F#P; negative when the Hessian is outside.
  std::optional<double> margin;
};

struct GeneratedField {
  ScalarField field;
  FieldInfo info;
};

// Families: block-quadratic, quadratic-plus-cosine, kinked-base,
// fiber-quadratic, zero. Parameter errors throw ConfigError.
GeneratedField generate_field(const std::string& family, const nlohmann::json& params, std::uint64_t seed);

// f + |y|^2 / j for j >= 1; j = +inf returns f unchanged.
ScalarField regularize_j(const ScalarField& f, double j);

// Largest s < lambda_min(D) with Schur(A - s I) in F, negative when A is
// outside F#P. Requires D positive definite.
double product_margin(const Subequation& F, const MatrixXd& hessian, Index n, Index m);

}  // namespace semiconvex
