#ifndef LOSSPRED_HARNESS_COMMANDS_H_
#define LOSSPRED_HARNESS_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace losspred::harness {

enum ExitCode { kExitOk = 0, kExitViolation = 1, kExitConfigError = 2 };

const std::vector<std::string>& command_names();

// Fills every default so the resolved copy fully determines the run. A seed
// override replaces the config's "seed".
nlohmann::json resolve_config(const std::string& command, nlohmann::json config,
                              std::optional<std::uint64_t> seed_override);

struct CommandOutcome {
  int exit_code = kExitOk;
  nlohmann::json report;
};

// Resolves the config, writes <out>/config.resolved.json, runs the command and
// writes <out>/report.json plus tables/ and plots/. Never throws for library
// errors: config and data problems map to exit code 2, violated invariants
// and bounds to 1. `base_dir` anchors relative paths inside the config.
CommandOutcome run_command(const std::string& command, const nlohmann::json& config,
                           const std::filesystem::path& out,
                           std::optional<std::uint64_t> seed_override = {},
                           const std::filesystem::path& base_dir = {});

}  // namespace losspred::harness

#endif  // LOSSPRED_HARNESS_COMMANDS_H_
