#include "semiconvex/harness/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "semiconvex/errors.hpp"

namespace semiconvex {

bool CommandReport::passed() const {
  if (error) return false;
  for (const Assertion& a : assertions)
    if (!a.passed) return false;
  return true;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

nlohmann::json report_json(const CommandReport& report) {
  nlohmann::json out;
  out["schema_version"] = kReportSchemaVersion;
  out["version"] = kLibraryVersion;
  out["command"] = report.command;
  out["config"] = report.config;
  out["summary"] = report.summary;
  nlohmann::json assertions = nlohmann::json::array();
  for (const Assertion& a : report.assertions)
    assertions.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  out["assertions"] = assertions;
  out["passed"] = report.passed();
  if (report.error) out["error"] = *report.error;
  return out;
}

std::string report_csv(const CommandReport& report) {
  std::string out;
  auto append_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += row[i];
    }
    out += '\n';
  };
  append_row(report.csv_header);
  for (const auto& row : report.rows) append_row(row);
  return out;
}

void write_report(const CommandReport& report, const std::string& json_path, const std::string& csv_path) {
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) throw ConfigError("cannot write report '" + json_path + "'");
    out << report_json(report).dump(2) << '\n';
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw ConfigError("cannot write points file '" + csv_path + "'");
    out << report_csv(report);
  }
}

}  // namespace semiconvex
