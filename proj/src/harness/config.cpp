#include "semiconvex/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "semiconvex/argmin.hpp"
#include "semiconvex/errors.hpp"

namespace semiconvex {
namespace {

using nlohmann::json;

const std::set<std::string> kTopLevel{"command", "seed",  "subequation", "field", "grid",  "epsilons",
                                      "js",      "tolerances", "output", "prox",  "argmin", "supconv",
                                      "check-sub"};

template <typename T>
void read(const json& obj, const char* key, T& target, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void require_object(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
}

double parse_j(const json& value) {
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw ConfigError("js entries must be numbers >= 1 or \"inf\"");
  }
  if (!value.is_number()) throw ConfigError("js entries must be numbers >= 1 or \"inf\"");
  const double j = value.get<double>();
  if (!(j >= 1.0)) throw ConfigError("js entries must be >= 1");
  return j;
}

}  // namespace

ExperimentConfig parse_config(const json& document) {
  require_object(document, "config");
  for (const auto& item : document.items())
    if (!kTopLevel.count(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");

  ExperimentConfig cfg;
  cfg.document = document;
  read(document, "command", cfg.command, "config");
  if (document.contains("seed")) {
    const json& seed = document.at("seed");
    if (!seed.is_number_integer() || seed.get<std::int64_t>() < 0) throw ConfigError("config.seed must be a nonnegative integer");
    cfg.seed = document.at("seed").get<std::uint64_t>();
  }

  if (document.contains("subequation")) {
    const json& s = document.at("subequation");
    require_object(s, "subequation");
    read(s, "name", cfg.subequation.name, "subequation");
    read(s, "params", cfg.subequation.params, "subequation");
  }
  if (document.contains("field")) {
    const json& f = document.at("field");
    require_object(f, "field");
    read(f, "family", cfg.field.family, "field");
    if (f.contains("params")) {
      require_object(f.at("params"), "field.params");
      cfg.field.params = f.at("params");
    }
  }
  // the pipeline subequation also drives field generation unless overridden
  if (!cfg.field.params.contains("subequation"))
    cfg.field.params["subequation"] = {{"name", cfg.subequation.name}, {"params", cfg.subequation.params}};

  if (document.contains("grid")) {
    const json& g = document.at("grid");
    require_object(g, "grid");
    read(g, "lower", cfg.grid.lower, "grid");
    read(g, "upper", cfg.grid.upper, "grid");
    read(g, "per_axis", cfg.grid.per_axis, "grid");
  }
  if (cfg.grid.lower.size() != cfg.grid.upper.size() || cfg.grid.lower.empty())
    throw ConfigError("grid.lower and grid.upper must be nonempty and of equal length");
  for (std::size_t i = 0; i < cfg.grid.lower.size(); ++i)
    if (!(cfg.grid.lower[i] <= cfg.grid.upper[i])) throw ConfigError("grid.lower must not exceed grid.upper");
  if (cfg.grid.per_axis < 1) throw ConfigError("grid.per_axis must be >= 1");

  read(document, "epsilons", cfg.epsilons, "config");
  for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
    if (!(cfg.epsilons[k] > 0.0)) throw ConfigError("epsilons must be positive");
    if (k > 0 && !(cfg.epsilons[k] < cfg.epsilons[k - 1])) throw ConfigError("epsilons must be strictly decreasing");
  }
  if (document.contains("js")) {
    if (!document.at("js").is_array()) throw ConfigError("config.js must be an array");
    cfg.js.clear();
    for (const json& j : document.at("js")) cfg.js.push_back(parse_j(j));
    for (std::size_t k = 1; k < cfg.js.size(); ++k)
      if (!(cfg.js[k] > cfg.js[k - 1])) throw ConfigError("js must be strictly increasing");
  }

  if (document.contains("tolerances")) {
    const json& t = document.at("tolerances");
    require_object(t, "tolerances");
    read(t, "membership_slack", cfg.tol.membership_slack, "tolerances");
    read(t, "jet_step", cfg.tol.jet_step, "tolerances");
    read(t, "stability_factor", cfg.tol.stability_factor, "tolerances");
    read(t, "schur", cfg.tol.schur, "tolerances");
    read(t, "argmin", cfg.tol.argmin, "tolerances");
    read(t, "monotone", cfg.tol.monotone, "tolerances");
    read(t, "contact_radius", cfg.tol.contact_radius, "tolerances");
    read(t, "contact_samples", cfg.tol.contact_samples, "tolerances");
    read(t, "contact", cfg.tol.contact, "tolerances");
    read(t, "pullback", cfg.tol.pullback, "tolerances");
  }
  if (!(cfg.tol.jet_step > 0.0) || !(cfg.tol.argmin > 0.0) || cfg.tol.contact_samples < 0)
    throw ConfigError("tolerances out of range");

  if (document.contains("output")) {
    const json& o = document.at("output");
    require_object(o, "output");
    read(o, "report", cfg.output.report, "output");
    read(o, "points", cfg.output.points, "output");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json document;
  try {
    document = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(document);
}

json to_json(const ExperimentConfig& cfg) {
  json js = json::array();
  for (double j : cfg.js) {
    if (std::isinf(j))
      js.push_back("inf");
    else
      js.push_back(j);
  }
  json out = cfg.document;
  out["command"] = cfg.command;
  out["seed"] = cfg.seed;
  out["subequation"] = {{"name", cfg.subequation.name}, {"params", cfg.subequation.params}};
  out["field"] = {{"family", cfg.field.family}, {"params", cfg.field.params}};
  out["grid"] = {{"lower", cfg.grid.lower}, {"upper", cfg.grid.upper}, {"per_axis", cfg.grid.per_axis}};
  out["epsilons"] = cfg.epsilons;
  out["js"] = js;
  out["tolerances"] = {{"membership_slack", cfg.tol.membership_slack},
                       {"jet_step", cfg.tol.jet_step},
                       {"stability_factor", cfg.tol.stability_factor},
                       {"schur", cfg.tol.schur},
                       {"argmin", cfg.tol.argmin},
                       {"monotone", cfg.tol.monotone},
                       {"contact_radius", cfg.tol.contact_radius},
                       {"contact_samples", cfg.tol.contact_samples},
                       {"contact", cfg.tol.contact},
                       {"pullback", cfg.tol.pullback}};
  out["output"] = {{"report", cfg.output.report}, {"points", cfg.output.points}};
  return out;
}

std::vector<VectorXd> grid_points(const GridSpec& grid) {
  const Index n = static_cast<Index>(grid.lower.size());
  return regular_grid(Eigen::Map<const VectorXd>(grid.lower.data(), n),
                      Eigen::Map<const VectorXd>(grid.upper.data(), n), grid.per_axis);
}

}  // namespace semiconvex
