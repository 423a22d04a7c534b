#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace heislab {

inline constexpr int kSchemaVersion = 1;

struct Diagnostic {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  std::string message;
  int line = 0;  // 1-based line in the config, 0 when unknown
};

struct ValidationResult {
  std::vector<Diagnostic> diagnostics;
  bool ok() const;
};

// Schema and hypothesis checks; no computation.
ValidationResult validate_config_text(const std::string& text);
ValidationResult validate_config_file(const std::filesystem::path& path);

struct RunOptions {
  std::filesystem::path out_dir = "heislab-out";
  int workers = 1;
  std::optional<std::uint64_t> seed;  // overrides the config's global seed
};

struct ExperimentOutcome {
  std::string id;
  std::string type;
  std::string status;  // "pass", "fail" or "error"
  int assertions = 0;
  int failed = 0;
  std::string error;
};

// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct RunOutcome {
  int exit_code = kExitOk;
  std::string scenario_id;
  std::string scenario_hash;
  std::vector<ExperimentOutcome> experiments;
  std::filesystem::path output_dir;  // <out_dir>/<scenario_id>
  std::vector<Diagnostic> diagnostics;
};

// Runs every experiment of the config and writes one CSV per experiment plus
// summary.json under <out_dir>/<scenario id>/. Files are written atomically.
RunOutcome run_config_text(const std::string& text, const RunOptions& opt);
RunOutcome run_config_file(const std::filesystem::path& path, const RunOptions& opt);

}  // namespace heislab
