#pragma once

#include <filesystem>
#include <string>

#include "hadamard/config.hpp"

namespace hadamard {

struct CommandContext {
  std::string config_path;
  std::filesystem::path out_root = "runs";
  Overrides overrides;
};

struct CommandOutcome {
  std::filesystem::path dir;
  int exit_code = 0;
  Json summary;  // the command's main JSON artifact
};

/// density.csv + theory.json
CommandOutcome cmd_theory(const CommandContext& ctx);
/// eigenvalues.csv + report.json
CommandOutcome cmd_simulate(const CommandContext& ctx);
/// report.json + histogram.csv + density.csv, with theory.json and
/// eigenvalues.csv alongside.
CommandOutcome cmd_compare(const CommandContext& ctx);
/// tensor_check.json; exit code 2 when any check exceeds its tolerance.
CommandOutcome cmd_tensor_check(const CommandContext& ctx);
/// concentration.csv + concentration_summary.json
CommandOutcome cmd_concentration(const CommandContext& ctx);

}  // namespace hadamard
