#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "semiconvex/harness/config.hpp"
#include "semiconvex/harness/fields.hpp"
#include "semiconvex/harness/report.hpp"
#include "semiconvex/jets.hpp"

namespace semiconvex {

struct PointRecord {
  std::string stage;  // "raw" or "j=<j>,eps=<eps>"
  VectorXd x;
  VectorXd gamma;
  double g = std::numeric_limits<double>::quiet_NaN();
  std::optional<Jet2d> jet;
  bool stable = false;
  std::string verdict;  // member, violation, unstable, error
  std::vector<std::string> flags;
};

struct ExperimentSummary {
  int total_points = 0;
  int stable_points = 0;
  int unstable_points = 0;
  int violations = 0;  // among stable points
  int errors = 0;
  int exceptions = 0;  // unstable + violations + errors
  double violation_rate = 0.0;
  double exception_rate = 0.0;
  double schur_max_error = std::numeric_limits<double>::quiet_NaN();
  double pullback_max_error = 0.0;
  int contact_checked = 0;
  int contact_failures = 0;
  double contact_worst_slack = std::numeric_limits<double>::infinity();
  int monotone_checked = 0;
  int monotone_violations = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  FieldInfo field;
  std::vector<PointRecord> points;
  ExperimentSummary summary;
  std::vector<Assertion> assertions;

  bool passed() const;
};

// Marginal of the raw field, then per (j, eps): regularize, f_eps, argmin on
// the base grid, jet of g_eps, membership of A + slack I in F, contact
// quadratic checks at stable points, and monotonicity of g in eps and j.
// Per-point failures are recorded; invalid configurations throw ConfigError.
ExperimentReport verify_minimum_principle(const ExperimentConfig& config);

CommandReport to_command_report(const ExperimentReport& report);

}  // namespace semiconvex
