#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sidforest {

/// Library version string.
const char* version();

/// Process exit codes used by the command line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitBoundViolated = 2,
  kExitRuntime = 3,
};

/// Commands accepted in the "command" config key.
const std::vector<std::string>& experiment_commands();

/// The published JSON Schema of experiment configs.
const nlohmann::json& config_schema();

/// Every key with its default value.
nlohmann::json default_config();

/// Checks `config` against config_schema(). Throws ValidationError whose
/// field() is the dotted path of the first offending key.
void validate_against_schema(const nlohmann::json& config);

/// Deep-merges `user` over the defaults, validates the result against the
/// schema and the cross-field rules, and fills in derived defaults
/// (e.g. the splitter for "auto").
nlohmann::json resolve_config(const nlohmann::json& user);

/// Sets a dotted key ("forest.k") from a command line "key=value" string.
/// The value is parsed as JSON when possible and kept as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// The resolved config without run-local keys (workers, output_dir), as
/// embedded in reports.
nlohmann::json config_echo(const nlohmann::json& resolved);

struct ExperimentOutcome {
  int exit_code = kExitOk;
  nlohmann::json report;
  std::vector<std::filesystem::path> files;
};

/// Runs a resolved config and writes report.csv, report.json and
/// config.resolved.json into `output_dir`. Library errors propagate.
ExperimentOutcome run_experiment(const nlohmann::json& resolved, const std::filesystem::path& output_dir);

/// Machine-readable diagnostic for an exception: {"error": {kind, message, field?, line?}}.
nlohmann::json error_json(const std::exception& e);

/// Exit code for an exception thrown by the library.
int exit_code_for(const std::exception& e);

}  // namespace sidforest
