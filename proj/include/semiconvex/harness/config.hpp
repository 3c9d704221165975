#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "semiconvex/field.hpp"

namespace semiconvex {

struct SubequationSpec {
  std::string name = "trace";
  std::vector<double> params;
};

struct FieldSpec {
  std::string family = "block-quadratic";
  nlohmann::json params = nlohmann::json::object();
};

struct GridSpec {
  std::vector<double> lower{-0.5, -0.5};
  std::vector<double> upper{0.5, 0.5};
  int per_axis = 20;
};

struct ToleranceSpec {
  double membership_slack = 1e-6;
  double jet_step = 0.02;
  double stability_factor = 10.0;
  double schur = 1e-5;
  double argmin = 1e-9;
  double monotone = 1e-8;
  double contact_radius = 0.05;
  int contact_samples = 16;
  double contact = 1e-9;
  double pullback = 1e-12;
};

struct OutputSpec {
  std::string report = "report.json";
  std::string points = "points.csv";
};

struct ExperimentConfig {
  std::string command = "minprin";
  std::uint64_t seed = 0;
  SubequationSpec subequation;
  FieldSpec field;
  GridSpec grid;
  std::vector<double> epsilons{0.01, 0.005};
  // +inf entries mean no regularization
  std::vector<double> js{100.0, 1000.0};
  ToleranceSpec tol;
  OutputSpec output;
  // Full parsed document, including command-specific sections.
  nlohmann::json document = nlohmann::json::object();
};

// Unknown top-level keys and malformed values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& document);
ExperimentConfig load_config(const std::string& path);

// Echo of the effective configuration with defaults filled in.
nlohmann::json to_json(const ExperimentConfig& config);

std::vector<VectorXd> grid_points(const GridSpec& grid);

}  // namespace semiconvex
