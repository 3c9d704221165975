#include "semiconvex/harness/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "semiconvex/argmin.hpp"
#include "semiconvex/errors.hpp"
#include "semiconvex/harness/fields.hpp"
#include "semiconvex/harness/pipeline.hpp"
#include "semiconvex/prox.hpp"
#include "semiconvex/subequations.hpp"
#include "semiconvex/supconv.hpp"

namespace semiconvex {
namespace {

using nlohmann::json;

const std::vector<std::string> kCommands{"prox", "argmin", "supconv", "check-sub", "minprin"};

json section(const ExperimentConfig& cfg, const std::string& name) {
  if (!cfg.document.contains(name)) return json::object();
  const json& s = cfg.document.at(name);
  if (!s.is_object()) throw ConfigError(name + " section must be an object");
  return s;
}

template <typename T>
T value(const json& obj, const std::string& where, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

VectorXd to_vector(const std::vector<double>& v) { return Eigen::Map<const VectorXd>(v.data(), v.size()); }

double grid_spacing(const GridSpec& grid) {
  double step = 0.0;
  if (grid.per_axis > 1)
    for (std::size_t i = 0; i < grid.lower.size(); ++i)
      step = std::max(step, (grid.upper[i] - grid.lower[i]) / (grid.per_axis - 1));
  return step;
}

std::vector<VectorXd> checked_grid(const ExperimentConfig& cfg, Index dim, const char* what) {
  if (static_cast<Index>(cfg.grid.lower.size()) != dim)
    throw ConfigError(std::string("grid must have dimension ") + std::to_string(dim) + " (" + what + ")");
  return grid_points(cfg.grid);
}

void append_vector(std::vector<std::string>& row, const VectorXd& v, Index size) {
  for (Index i = 0; i < size; ++i) row.push_back(v.size() == size ? format_number(v(i)) : "nan");
}

void append_names(std::vector<std::string>& header, const char* prefix, Index size) {
  for (Index i = 0; i < size; ++i) header.push_back(prefix + std::to_string(i));
}

std::string error_flag(const Error& e) { return std::string("error:") + e.kind(); }

CommandReport prox_command(const ExperimentConfig& cfg) {
  const json s = section(cfg, "prox");
  const auto sigmas = value<std::vector<double>>(s, "prox", "sigmas", {1.0});
  const int dim = value<int>(s, "prox", "dim", 1);
  const double box = value<double>(s, "prox", "box", 5.0);
  NonexpansiveOptions opt;
  opt.pairs = value<int>(s, "prox", "pairs", 1000);
  opt.tol = value<double>(s, "prox", "tol", 1e-7);
  opt.resolvent.tol = value<double>(s, "prox", "resolvent_tol", 1e-12);
  opt.seed = cfg.seed;
  const auto evaluate = value<std::vector<std::vector<double>>>(s, "prox", "evaluate", {});
  if (sigmas.empty()) throw ConfigError("prox.sigmas must not be empty");

  CommandReport out;
  out.command = "prox";
  out.csv_header = {"sigma", "mu", "pairs", "full_ratio_max", "fiber_ratio_max", "passed"};
  json sweep = json::array();
  json evaluations = json::array();
  bool full_ok = true, fiber_ok = true;
  for (double sigma : sigmas) {
    const GeneratedField gen = generate_field("fiber-quadratic", {{"dim", dim}, {"sigma", sigma}, {"box", box}}, cfg.seed);
    const NonexpansiveReport r = verify_nonexpansive(gen.field, opt);
    full_ok = full_ok && r.full_ok;
    fiber_ok = fiber_ok && r.fiber_ok;
    out.rows.push_back({format_number(sigma), format_number(*r.mu), std::to_string(r.pairs),
                        format_number(r.full_ratio_max), format_number(r.fiber_ratio_max),
                        r.passed() ? "true" : "false"});
    sweep.push_back({{"sigma", sigma},
                     {"mu", *r.mu},
                     {"full_ratio_max", r.full_ratio_max},
                     {"fiber_ratio_max", r.fiber_ratio_max}});
    for (const auto& zeta : evaluate) {
      if (static_cast<Index>(zeta.size()) != 2 * dim) throw ConfigError("prox.evaluate points must have length 2 dim");
      const ResolventSolveReport h = resolvent_full(gen.field, to_vector(zeta), opt.resolvent);
      evaluations.push_back({{"sigma", sigma},
                             {"zeta", zeta},
                             {"point", std::vector<double>(h.point.data(), h.point.data() + h.point.size())},
                             {"residual", h.residual},
                             {"iterations", h.iterations}});
    }
  }
  out.summary = {{"sweep", sweep}};
  if (!evaluations.empty()) out.summary["evaluations"] = evaluations;
  out.assertions.push_back({"nonexpansive", full_ok, "full resolvent ratio <= 1 + tol for every sigma"});
  out.assertions.push_back({"fiber_contraction", fiber_ok, "fiber ratio <= mu(sigma) + tol for every sigma"});
  return out;
}

CommandReport argmin_command(const ExperimentConfig& cfg) {
  const json s = section(cfg, "argmin");
  const GeneratedField gen = generate_field(cfg.field.family, cfg.field.params, cfg.seed);
  const ScalarField& f = gen.field;
  const Index n = f.base_dim(), m = f.fiber_dim();
  const std::vector<VectorXd> grid = checked_grid(cfg, n, "base");

  CalmnessOptions copt;
  copt.grid_step = value<double>(s, "argmin", "grid_step", grid_spacing(cfg.grid));
  if (!(copt.grid_step > 0.0)) copt.grid_step = cfg.tol.jet_step;
  copt.radii = value<std::vector<double>>(s, "argmin", "radii", {});
  copt.flag_factor = value<double>(s, "argmin", "flag_factor", copt.flag_factor);
  copt.random_samples = value<int>(s, "argmin", "random_samples", copt.random_samples);
  copt.seed = cfg.seed;
  copt.argmin.tol = cfg.tol.argmin;
  const bool calmness = value<bool>(s, "argmin", "calmness", true);

  CommandReport out;
  out.command = "argmin";
  out.csv_header = {};
  append_names(out.csv_header, "x", n);
  append_names(out.csv_header, "gamma", m);
  for (const char* c : {"g", "residual", "constant", "secant_gap", "flagged", "status"}) out.csv_header.push_back(c);

  int solved = 0, flagged = 0, scanned = 0;
  double max_constant = 0.0;
  std::vector<std::pair<VectorXd, bool>> flags;
  std::vector<double> smooth_constants;
  for (const VectorXd& x : grid) {
    std::vector<std::string> row;
    append_vector(row, x, n);
    try {
      const ArgminResult am = solve_argmin(f, x, copt.argmin);
      ++solved;
      append_vector(row, am.gamma, m);
      row.push_back(format_number(am.g_value));
      row.push_back(format_number(am.residual));
      std::string status = "ok";
      if (calmness) {
        try {
          const CalmnessPoint cp = calmness_scan(f, {x}, copt).points.front();
          ++scanned;
          flagged += cp.flagged ? 1 : 0;
          max_constant = std::max(max_constant, cp.constant);
          flags.emplace_back(x, cp.flagged);
          if (!cp.flagged) smooth_constants.push_back(cp.constant);
          row.push_back(format_number(cp.constant));
          row.push_back(format_number(cp.secant_gap));
          row.push_back(cp.flagged ? "true" : "false");
        } catch (const Error& e) {
          for (int k = 0; k < 3; ++k) row.push_back("nan");
          status = error_flag(e);
        }
      } else {
        for (int k = 0; k < 3; ++k) row.push_back("nan");
      }
      row.push_back(status);
    } catch (const Error& e) {
      append_vector(row, VectorXd(), m);
      for (int k = 0; k < 5; ++k) row.push_back("nan");
      row.push_back(error_flag(e));
    }
    out.rows.push_back(std::move(row));
  }

  const double fraction = scanned > 0 ? static_cast<double>(flagged) / scanned : 0.0;
  out.summary = {{"points", grid.size()},
                 {"solved", solved},
                 {"scanned", scanned},
                 {"flagged", flagged},
                 {"flagged_fraction", fraction},
                 {"max_constant", max_constant}};
  out.assertions.push_back({"all_points_solved", solved == static_cast<int>(grid.size()),
                            std::to_string(solved) + " of " + std::to_string(grid.size())});
  if (s.contains("max_flagged_fraction")) {
    const double limit = value<double>(s, "argmin", "max_flagged_fraction", 0.0);
    out.assertions.push_back({"flagged_fraction", fraction <= limit, "flagged fraction " + format_number(fraction)});
  }
  if (s.contains("expect_flagged")) {
    const auto expected = value<std::vector<std::vector<double>>>(s, "argmin", "expect_flagged", {});
    int missing = 0;
    for (const auto& e : expected) {
      const VectorXd target = to_vector(e);
      auto it = std::find_if(flags.begin(), flags.end(), [&](const auto& p) {
        return p.first.size() == target.size() && (p.first - target).norm() <= 1e-12;
      });
      if (it == flags.end() || !it->second) ++missing;
    }
    out.assertions.push_back({"expected_flags", missing == 0, std::to_string(missing) + " expected points not flagged"});
  }
  if (s.contains("constant_range")) {
    const auto range = value<std::vector<double>>(s, "argmin", "constant_range", {});
    if (range.size() != 2) throw ConfigError("argmin.constant_range must be [lo, hi]");
    const auto outside = std::count_if(smooth_constants.begin(), smooth_constants.end(),
                                       [&](double c) { return c < range[0] || c > range[1]; });
    out.assertions.push_back({"calmness_constant_range", outside == 0,
                              std::to_string(outside) + " unflagged constants outside the range"});
  }
  return out;
}

CommandReport supconv_command(const ExperimentConfig& cfg) {
  const json s = section(cfg, "supconv");
  const GeneratedField gen = generate_field(cfg.field.family, cfg.field.params, cfg.seed);
  const ScalarField& f = gen.field;
  const std::vector<VectorXd> grid = checked_grid(cfg, f.dimension(), "base x fiber");

  SupConvPropertyOptions opt;
  opt.tol = value<double>(s, "supconv", "tol", opt.tol);
  opt.segments = value<int>(s, "supconv", "segments", opt.segments);
  opt.step = value<double>(s, "supconv", "step", opt.step);
  opt.seed = cfg.seed;
  const SupConvPropertyReport r = verify_supconv_properties(f, cfg.epsilons, grid, opt);

  CommandReport out;
  out.command = "supconv";
  out.csv_header = {"epsilon", "delta", "distance_to_source"};
  for (std::size_t k = 0; k < r.epsilons.size(); ++k)
    out.rows.push_back(
        {format_number(r.epsilons[k]), format_number(r.deltas[k]), format_number(r.distance_to_source[k])});
  out.summary = {{"ordering_violation", r.ordering_violation},
                 {"convexity_checked", r.convexity_checked},
                 {"max_shift_over_delta", r.max_shift_over_delta}};
  out.summary["convexity_min"] = std::isinf(r.convexity_min) ? json() : json(r.convexity_min);
  out.assertions.push_back({"ordering", r.ordering_ok, "worst violation " + format_number(r.ordering_violation)});
  out.assertions.push_back({"semiconvexity", r.convexity_ok, "min second difference " + format_number(r.convexity_min)});
  out.assertions.push_back({"convergence", r.convergence_ok, "distance to the source shrinks with epsilon"});
  out.assertions.push_back({"localization", r.localization_ok,
                            "max shift / delta " + format_number(r.max_shift_over_delta)});

  if (s.contains("fiber_semiconcavity")) {
    const json fs = s.at("fiber_semiconcavity");
    if (!fs.is_object()) throw ConfigError("supconv.fiber_semiconcavity must be an object");
    const std::string where = "supconv.fiber_semiconcavity";
    const double eps = value<double>(fs, where, "epsilon", cfg.epsilons.back());
    const SupConvField fe = partial_sup_convolve(f, eps);
    const auto& cert = fe.field().certificates().fiber_semiconcavity;
    if (!fs.contains("kappa2") && !cert) throw ConfigError(where + ".kappa2 is required for this field");
    const double kappa2 = value<double>(fs, where, "kappa2", cert.value_or(0.0));
    FiberSemiconcavityOptions fopt;
    fopt.samples = value<int>(fs, where, "samples", fopt.samples);
    fopt.step = value<double>(fs, where, "step", fopt.step);
    fopt.tol = value<double>(fs, where, "tol", fopt.tol);
    fopt.seed = cfg.seed;
    const Box region = Box::product(fe.localized_base(), f.fiber_domain());
    const FiberSemiconcavityReport fr = verify_fiber_semiconcavity(fe.field(), kappa2, fopt, region);
    out.summary["fiber_semiconcavity"] = {
        {"epsilon", eps}, {"kappa2", kappa2}, {"samples", fr.samples}, {"worst", fr.worst}};
    out.assertions.push_back({"fiber_semiconcavity", fr.passed, "worst second difference " + format_number(fr.worst)});
  }
  return out;
}

CommandReport check_sub_command(const ExperimentConfig& cfg) {
  const json s = section(cfg, "check-sub");
  const std::string expect = value<std::string>(s, "check-sub", "expect", "member");
  if (expect != "member" && expect != "violation") throw ConfigError("check-sub.expect must be member or violation");
  const double min_rate = value<double>(s, "check-sub", "min_violation_rate", 0.99);
  const GeneratedField gen = generate_field(cfg.field.family, cfg.field.params, cfg.seed);
  const ScalarField& f = gen.field;
  const Index n = f.base_dim(), m = f.fiber_dim(), d = f.dimension();
  const Subequation F = catalog(cfg.subequation.name, n, cfg.subequation.params);
  const std::vector<VectorXd> grid = checked_grid(cfg, d, "base x fiber");
  ProductMembershipConfig pcfg;
  pcfg.seed = cfg.seed;
  pcfg.gamma_samples = value<int>(s, "check-sub", "gamma_samples", pcfg.gamma_samples);
  JetEstimateOptions jopt;
  jopt.h = cfg.tol.jet_step;
  jopt.stability_factor = cfg.tol.stability_factor;
  const SymMatrixd slack = cfg.tol.membership_slack * SymMatrixd::identity(d);

  CommandReport out;
  out.command = "check-sub";
  append_names(out.csv_header, "z", d);
  out.csv_header.push_back("verdict");
  out.csv_header.push_back("flags");
  int stable = 0, violations = 0, errors = 0, sampled = 0;
  for (const VectorXd& z : grid) {
    std::vector<std::string> row;
    append_vector(row, z, d);
    try {
      const JetEstimate est = estimate_jet(f, z, jopt);
      if (est.unstable) {
        row.push_back("unstable");
        row.push_back("unstable");
      } else {
        ++stable;
        const Jet2d jet(est.jet.r, est.jet.p, est.jet.A + slack);
        const ProductVerdict v = product_membership(F, BlockSplit{n, m}, jet, pcfg);
        violations += v == ProductVerdict::not_member ? 1 : 0;
        sampled += v == ProductVerdict::member_sampled ? 1 : 0;
        row.push_back(v == ProductVerdict::not_member ? "violation" : "member");
        row.push_back(v == ProductVerdict::member_sampled ? "sampled" : "");
      }
    } catch (const Error& e) {
      ++errors;
      row.push_back("error");
      row.push_back(error_flag(e));
    }
    out.rows.push_back(std::move(row));
  }
  const double rate = stable > 0 ? static_cast<double>(violations) / stable : 0.0;
  out.summary = {{"points", grid.size()}, {"stable_points", stable},      {"violations", violations},
                 {"errors", errors},      {"sampled_verdicts", sampled}, {"violation_rate", rate}};
  out.assertions.push_back({"stable_points_present", stable > 0, std::to_string(stable) + " stable points"});
  out.assertions.push_back({"no_errors", errors == 0, std::to_string(errors) + " points failed"});
  if (expect == "member")
    out.assertions.push_back({"no_violations", violations == 0, std::to_string(violations) + " violations"});
  else
    out.assertions.push_back({"violation_rate", rate >= min_rate, "violation rate " + format_number(rate)});
  return out;
}

json error_record(const Error& e) { return {{"kind", e.kind()}, {"message", e.what()}}; }

struct Overrides {
  std::string config;
  std::string report;
  std::string points;
};

int execute(const std::string& command, const Overrides& args) {
  std::optional<ExperimentConfig> cfg;
  CommandReport report;
  report.command = command;
  try {
    cfg = load_config(args.config);
    if (!args.report.empty()) cfg->output.report = args.report;
    if (!args.points.empty()) cfg->output.points = args.points;
    if (cfg->document.contains("command") && cfg->command != command)
      throw ConfigError("config is for command '" + cfg->command + "', not '" + command + "'");
    cfg->command = command;
    report = run_command(command, *cfg);
  } catch (const ConfigError& e) {
    std::cerr << "semiconvex " << command << ": " << e.what() << "\n";
    report.error = error_record(e);
    const std::string path = cfg ? cfg->output.report : args.report;
    if (cfg) report.config = to_json(*cfg);
    if (!path.empty()) {
      try {
        write_report(report, path, "");
      } catch (const ConfigError& io) {
        std::cerr << "semiconvex " << command << ": " << io.what() << "\n";
      }
    }
    return kExitConfig;
  }
  try {
    write_report(report, cfg->output.report, cfg->output.points);
  } catch (const ConfigError& e) {
    std::cerr << "semiconvex " << command << ": " << e.what() << "\n";
    return kExitConfig;
  }
  for (const Assertion& a : report.assertions)
    std::cout << (a.passed ? "PASS " : "FAIL ") << a.name << ": " << a.detail << "\n";
  if (report.error) std::cout << "ERROR " << (*report.error)["kind"].get<std::string>() << ": "
                              << (*report.error)["message"].get<std::string>() << "\n";
  return report.passed() ? kExitPass : kExitAssertion;
}

}  // namespace

CommandReport run_command(const std::string& command, const ExperimentConfig& config) {
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
    throw ConfigError("unknown command '" + command + "'");
  CommandReport out;
  try {
    if (command == "prox") out = prox_command(config);
    if (command == "argmin") out = argmin_command(config);
    if (command == "supconv") out = supconv_command(config);
    if (command == "check-sub") out = check_sub_command(config);
    if (command == "minprin") out = to_command_report(verify_minimum_principle(config));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    out = CommandReport{};
    out.error = error_record(e);
  }
  out.command = command;
  out.config = to_json(config);
  return out;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Marginal-function minimum principle experiments"};
  app.require_subcommand(1);
  Overrides args;
  std::string selected;
  for (const std::string& name : kCommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config, "JSON config file")->required();
    sub->add_option("--report", args.report, "JSON report path (overrides output.report)");
    sub->add_option("--points", args.points, "CSV points path (overrides output.points)");
    sub->callback([&selected, name] { selected = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }
  return execute(selected, args);
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace semiconvex
