#pragma once

#include <string>
#include <vector>

#include "semiconvex/harness/config.hpp"
#include "semiconvex/harness/report.hpp"

namespace semiconvex {

enum ExitCode : int { kExitPass = 0, kExitAssertion = 1, kExitConfig = 2 };

// Subcommands: prox, argmin, supconv, check-sub, minprin. Errors other than
// ConfigError are recorded in the report's error field.
CommandReport run_command(const std::string& command, const ExperimentConfig& config);

// semiconvex <subcommand> --config FILE [--report FILE] [--points FILE]
int run_cli(int argc, const char* const* argv);
// args[0] is the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace semiconvex
