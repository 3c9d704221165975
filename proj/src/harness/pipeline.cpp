#include "semiconvex/harness/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "semiconvex/argmin.hpp"
#include "semiconvex/errors.hpp"
#include "semiconvex/harness/contact.hpp"
#include "semiconvex/subequations.hpp"
#include "semiconvex/supconv.hpp"

namespace semiconvex {
namespace {

std::string stage_name(double j, double eps) {
  char buf[64];
  if (std::isinf(j))
    std::snprintf(buf, sizeof buf, "j=inf,eps=%g", eps);
  else
    std::snprintf(buf, sizeof buf, "j=%g,eps=%g", j, eps);
  return buf;
}

struct Stage {
  std::string name;
  double j = 0.0;
  double eps = 0.0;
  bool raw = false;
};

class Runner {
 public:
  explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg) {}

  ExperimentReport run() {
    ExperimentReport report;
    report.config = cfg_;
    const GeneratedField generated = generate_field(cfg_.field.family, cfg_.field.params, cfg_.seed);
    report.field = generated.info;
    const ScalarField& f = generated.field;
    n_ = f.base_dim();
    m_ = f.fiber_dim();
    if (m_ == 0) throw ConfigError("minimum principle pipeline needs a fiber variable");
    const Subequation F = catalog(cfg_.subequation.name, n_, cfg_.subequation.params);
    const std::vector<VectorXd> grid = grid_points(cfg_.grid);
    if (static_cast<Index>(cfg_.grid.lower.size()) != n_)
      throw ConfigError("grid dimension does not match the field base dimension");
    check_localization(f, grid);

    grid_step_ = 0.0;
    for (std::size_t i = 0; i < cfg_.grid.lower.size(); ++i)
      grid_step_ = std::max(grid_step_, cfg_.grid.per_axis > 1
                                            ? (cfg_.grid.upper[i] - cfg_.grid.lower[i]) / (cfg_.grid.per_axis - 1)
                                            : 0.0);
    if (grid_step_ == 0.0) grid_step_ = cfg_.tol.jet_step;

    std::vector<Stage> stages;
    const auto& sigma = f.certificates().fiber_convexity;
    if (sigma && *sigma > 0.0) stages.push_back({"raw", 0.0, 0.0, true});
    for (double j : cfg_.js)
      for (double eps : cfg_.epsilons) stages.push_back({stage_name(j, eps), j, eps, false});

    std::vector<std::vector<double>> values(stages.size(), std::vector<double>(grid.size(), std::nan("")));
    for (std::size_t s = 0; s < stages.size(); ++s)
      run_stage(stages[s], f, F, generated.info, grid, values[s], report);

    check_monotone(stages, values, report);
    summarize(report);
    return report;
  }

 private:
  void check_localization(const ScalarField& f, const std::vector<VectorXd>& grid) const {
    if (cfg_.epsilons.empty() || cfg_.js.empty()) return;
    const double j_min = *std::min_element(cfg_.js.begin(), cfg_.js.end());
    const double eps_max = *std::max_element(cfg_.epsilons.begin(), cfg_.epsilons.end());
    const ScalarField widest = regularize_j(f, j_min);
    const auto& sup = widest.certificates().sup_norm;
    if (!sup) throw ConfigError("field has no sup-norm certificate for the sup-convolution stages");
    const double delta = localization_radius(eps_max, *sup);
    const Box base = f.base_domain();
    for (const VectorXd& x : grid) {
      if (!base.contains(x, delta + 2.0 * cfg_.tol.jet_step)) {
        char msg[160];
        std::snprintf(msg, sizeof msg, "grid does not fit inside U(delta) with delta = %.6g for eps = %g", delta, eps_max);
        throw ConfigError(msg);
      }
    }
  }

  void run_stage(const Stage& stage, const ScalarField& f, const Subequation& F, const FieldInfo& info,
                 const std::vector<VectorXd>& grid, std::vector<double>& values, ExperimentReport& report) {
    std::optional<ScalarField> source;
    std::string setup_error;
    try {
      source = stage.raw ? f : build_f_epsilon(regularize_j(f, stage.j), stage.eps);
    } catch (const Error& e) {
      setup_error = std::string("error:") + e.kind();
    }

    ArgminOptions aopt;
    aopt.tol = cfg_.tol.argmin;
    JetEstimateOptions jopt;
    jopt.h = cfg_.tol.jet_step;
    jopt.stability_factor = cfg_.tol.stability_factor;
    const SymMatrixd slack = cfg_.tol.membership_slack * SymMatrixd::identity(n_);

    for (std::size_t p = 0; p < grid.size(); ++p) {
      PointRecord rec;
      rec.stage = stage.name;
      rec.x = grid[p];
      if (!source) {
        rec.verdict = "error";
        rec.flags.push_back(setup_error);
        report.points.push_back(rec);
        continue;
      }
      try {
        const ScalarField g = marginal_field(*source, aopt);
        const ArgminResult am = solve_argmin(*source, rec.x, aopt);
        rec.gamma = am.gamma;
        rec.g = am.g_value;
        values[p] = am.g_value;
        const JetEstimate est = estimate_jet(g, rec.x, jopt);
        rec.jet = est.jet;
        rec.stable = !est.unstable;
        if (!rec.stable) {
          rec.verdict = "unstable";
          rec.flags.push_back("unstable");
        } else {
          rec.verdict = F.contains(est.jet.A + slack) ? "member" : "violation";
        }
        if (stage.raw && info.schur) {
          const double err = (est.jet.A.dense() - *info.schur).cwiseAbs().maxCoeff();
          schur_error_ = std::isnan(schur_error_) ? err : std::max(schur_error_, err);
          if (err > cfg_.tol.schur) rec.flags.push_back("schur");
        }
        if (!stage.raw && rec.stable) contact_check(stage, *source, est, am, rec);
      } catch (const Error& e) {
        rec.verdict = "error";
        rec.flags.push_back(std::string("error:") + e.kind());
      }
      report.points.push_back(rec);
    }
  }

  void contact_check(const Stage& stage, const ScalarField& fe, const JetEstimate& est, const ArgminResult& am,
                     PointRecord& rec) {
    CalmnessOptions copt;
    copt.grid_step = grid_step_;
    copt.radii = {cfg_.tol.jet_step};
    copt.random_samples = 0;
    copt.argmin.tol = cfg_.tol.argmin;
    const CalmnessReport calm = calmness_scan(fe, {rec.x}, copt);
    const CalmnessPoint& cp = calm.points.front();
    if (cp.flagged) {
      rec.flags.push_back("nondifferentiable");
      return;
    }
    const double kappa2 = fe.certificates().fiber_semiconcavity.value_or(0.0);
    const ContactQuadratic q = build_contact_quadratic(est.jet, cp.jacobian, kappa2, stage.eps, rec.x, am.gamma);
    const Jet2d pulled = pullback_slice(q.jet(), BlockSplit{n_, m_}, cp.jacobian);
    const MatrixXd expected = est.jet.A.dense() + stage.eps * MatrixXd::Identity(n_, n_);
    const double pull_err = (pulled.A.dense() - expected).cwiseAbs().maxCoeff();
    pullback_error_ = std::max(pullback_error_, pull_err);
    if (pull_err > cfg_.tol.pullback) rec.flags.push_back("pullback");

    DominationOptions dopt;
    dopt.radius = cfg_.tol.contact_radius;
    dopt.samples = cfg_.tol.contact_samples;
    dopt.tol = cfg_.tol.contact;
    dopt.seed = cfg_.seed + static_cast<std::uint64_t>(contact_checked_);
    const DominationCheck dom = check_domination(q, fe, dopt);
    ++contact_checked_;
    contact_worst_ = std::min(contact_worst_, dom.worst_slack);
    if (!dom.holds) {
      ++contact_failures_;
      rec.flags.push_back("contact");
    }
  }

  // g decreases as eps decreases (fixed j) and as j increases (fixed eps);
  // the raw marginal lies below every regularized one.
  void check_monotone(const std::vector<Stage>& stages, const std::vector<std::vector<double>>& values,
                      ExperimentReport& report) {
    const std::size_t offset = !stages.empty() && stages.front().raw ? 1 : 0;
    const std::size_t ne = cfg_.epsilons.size();
    auto index = [&](std::size_t jj, std::size_t ee) { return offset + jj * ne + ee; };
    auto compare = [&](std::size_t lower_stage, std::size_t upper_stage, const char* flag) {
      for (std::size_t p = 0; p < values[lower_stage].size(); ++p) {
        const double lo = values[lower_stage][p], hi = values[upper_stage][p];
        if (std::isnan(lo) || std::isnan(hi)) continue;
        ++monotone_checked_;
        if (lo > hi + cfg_.tol.monotone) {
          ++monotone_violations_;
          report.points[lower_stage * values[lower_stage].size() + p].flags.push_back(flag);
        }
      }
    };
    for (std::size_t jj = 0; jj < cfg_.js.size(); ++jj)
      for (std::size_t ee = 0; ee < ne; ++ee) {
        if (ee + 1 < ne) compare(index(jj, ee + 1), index(jj, ee), "monotone_eps");
        if (jj + 1 < cfg_.js.size()) compare(index(jj + 1, ee), index(jj, ee), "monotone_j");
        if (offset == 1) compare(0, index(jj, ee), "monotone_raw");
      }
  }

  void summarize(ExperimentReport& report) {
    ExperimentSummary& s = report.summary;
    for (const PointRecord& rec : report.points) {
      ++s.total_points;
      if (rec.verdict == "error") {
        ++s.errors;
      } else if (!rec.stable) {
        ++s.unstable_points;
      } else {
        ++s.stable_points;
        if (rec.verdict == "violation") ++s.violations;
      }
    }
    s.exceptions = s.unstable_points + s.violations + s.errors;
    s.violation_rate = s.stable_points > 0 ? static_cast<double>(s.violations) / s.stable_points : 0.0;
    s.exception_rate = s.total_points > 0 ? static_cast<double>(s.exceptions) / s.total_points : 0.0;
    s.schur_max_error = schur_error_;
    s.pullback_max_error = pullback_error_;
    s.contact_checked = contact_checked_;
    s.contact_failures = contact_failures_;
    s.contact_worst_slack = contact_worst_;
    s.monotone_checked = monotone_checked_;
    s.monotone_violations = monotone_violations_;

    auto add = [&](const char* name, bool ok, const std::string& detail) {
      report.assertions.push_back({name, ok, detail});
    };
    add("stable_points_present", s.stable_points > 0, std::to_string(s.stable_points) + " stable points");
    add("no_violations", s.violations == 0,
        std::to_string(s.violations) + " of " + std::to_string(s.stable_points) + " stable points violate F");
    add("no_errors", s.errors == 0, std::to_string(s.errors) + " points failed");
    if (!std::isnan(s.schur_max_error))
      add("schur_complement", s.schur_max_error <= cfg_.tol.schur, "max error " + format_number(s.schur_max_error));
    add("pullback_identity", s.pullback_max_error <= cfg_.tol.pullback,
        "max error " + format_number(s.pullback_max_error));
    add("contact_domination", s.contact_failures == 0,
        std::to_string(s.contact_failures) + " of " + std::to_string(s.contact_checked) + " checks failed");
    add("monotone_convergence", s.monotone_violations == 0,
        std::to_string(s.monotone_violations) + " of " + std::to_string(s.monotone_checked) + " comparisons failed");
  }

  const ExperimentConfig& cfg_;
  Index n_ = 0;
  Index m_ = 0;
  double grid_step_ = 0.0;
  double schur_error_ = std::nan("");
  double pullback_error_ = 0.0;
  int contact_checked_ = 0;
  int contact_failures_ = 0;
  double contact_worst_ = std::numeric_limits<double>::infinity();
  int monotone_checked_ = 0;
  int monotone_violations_ = 0;
};

}  // namespace

bool ExperimentReport::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

ExperimentReport verify_minimum_principle(const ExperimentConfig& config) { return Runner(config).run(); }

CommandReport to_command_report(const ExperimentReport& report) {
  CommandReport out;
  out.command = "minprin";
  out.config = to_json(report.config);
  const ExperimentSummary& s = report.summary;
  nlohmann::json summary = {{"total_points", s.total_points},
                            {"stable_points", s.stable_points},
                            {"unstable_points", s.unstable_points},
                            {"violations", s.violations},
                            {"errors", s.errors},
                            {"exceptions", s.exceptions},
                            {"violation_rate", s.violation_rate},
                            {"exception_rate", s.exception_rate},
                            {"pullback_max_error", s.pullback_max_error},
                            {"contact_checked", s.contact_checked},
                            {"contact_failures", s.contact_failures},
                            {"monotone_checked", s.monotone_checked},
                            {"monotone_violations", s.monotone_violations}};
  summary["schur_max_error"] = std::isnan(s.schur_max_error) ? nlohmann::json() : nlohmann::json(s.schur_max_error);
  summary["contact_worst_slack"] =
      std::isinf(s.contact_worst_slack) ? nlohmann::json() : nlohmann::json(s.contact_worst_slack);
  nlohmann::json field = {{"family", report.field.family}};
  if (report.field.margin) field["margin"] = *report.field.margin;
  if (report.field.verdict) field["product_verdict"] = to_string(*report.field.verdict);
  if (report.field.schur_member) field["schur_member"] = *report.field.schur_member;
  summary["field"] = field;
  out.summary = summary;
  out.assertions = report.assertions;

  const Index n = report.field.base_dim;
  const Index m = report.field.fiber_dim;
  out.csv_header.push_back("stage");
  for (Index i = 0; i < n; ++i) out.csv_header.push_back("x" + std::to_string(i));
  for (Index i = 0; i < m; ++i) out.csv_header.push_back("gamma" + std::to_string(i));
  out.csv_header.push_back("g");
  for (Index i = 0; i < n; ++i) out.csv_header.push_back("p" + std::to_string(i));
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) out.csv_header.push_back("A" + std::to_string(i) + std::to_string(j));
  out.csv_header.push_back("verdict");
  out.csv_header.push_back("flags");

  for (const PointRecord& rec : report.points) {
    std::vector<std::string> row{rec.stage};
    for (Index i = 0; i < n; ++i) row.push_back(format_number(rec.x(i)));
    for (Index i = 0; i < m; ++i) row.push_back(rec.gamma.size() == m ? format_number(rec.gamma(i)) : "nan");
    row.push_back(format_number(rec.g));
    for (Index i = 0; i < n; ++i) row.push_back(rec.jet ? format_number(rec.jet->p(i)) : "nan");
    for (Index i = 0; i < n; ++i)
      for (Index j = i; j < n; ++j) row.push_back(rec.jet ? format_number(rec.jet->A(i, j)) : "nan");
    row.push_back(rec.verdict);
    std::string flags;
    for (const std::string& flag : rec.flags) flags += (flags.empty() ? "" : ";") + flag;
    row.push_back(flags);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace semiconvex
