#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace semiconvex {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "0.1.0";

struct Assertion {
  std::string name;
  bool passed = true;
  std::string detail;
};

// Output of one CLI subcommand: a JSON report plus per-point CSV rows.
struct CommandReport {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json summary = nlohmann::json::object();
  std::vector<Assertion> assertions;
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> rows;
  std::optional<nlohmann::json> error;  // {"kind", "message"}

  bool passed() const;
};

// Shortest round-trip decimal form; "nan" and "inf" spelled out.
std::string format_number(double value);

nlohmann::json report_json(const CommandReport& report);
std::string report_csv(const CommandReport& report);

// Writes both files; empty paths are skipped. IO failures throw ConfigError.
void write_report(const CommandReport& report, const std::string& json_path, const std::string& csv_path);

}  // namespace semiconvex
