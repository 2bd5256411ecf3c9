#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "wkam/config.hpp"

namespace wkam {

// One certified statement: PASS iff value <= bound unless noted otherwise.
struct Check {
  std::string statement;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct RunOptions {
  std::string out_dir = "wkam_out";
  bool compute_c = false; // compute c when no cached value matches
  bool write_files = true;
};

struct CommandResult {
  std::string command;
  std::string config_hash;
  std::vector<Check> checks;
  nlohmann::json summary;   // command-specific numbers
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;

  bool pass() const;
  int exit_code() const { return pass() ? 0 : 1; }
};

// Each command validates the config, runs its stage, writes CSV and text
// outputs plus manifest_<command>.json into out_dir and returns the checks.
// Configuration problems and refused hypotheses throw ConfigError or
// RefusalError; numeric breakdowns throw NumericError.
CommandResult cmd_critical(const Config &config, const RunOptions &options);
CommandResult cmd_aubry(const Config &config, const RunOptions &options);
CommandResult cmd_strict(const Config &config, const RunOptions &options);
CommandResult cmd_regularize(const Config &config, const RunOptions &options);
CommandResult cmd_verify(const Config &config, const RunOptions &options);

// Deterministic renderings: no timings, fixed number formatting.
std::string format_report(const CommandResult &result);
nlohmann::json report_json(const CommandResult &result);
nlohmann::json run_manifest(const Config &config, const CommandResult &result);

// Exit code for an exception escaping a command: 2 for configuration,
// argument and refusal errors, 3 for numeric failures.
int exit_code_for(const std::exception &error);

} // namespace wkam
