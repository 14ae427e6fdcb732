#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "pcflow/config.hpp"

namespace pcflow {

enum ExitCode : int {
  exit_ok = 0,
  exit_config_error = 2,
  exit_numerical_abort = 3,
  exit_diagnostic_failure = 4,
};

struct CommandOptions {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  /// Progress and error messages; std::cerr when null.
  std::ostream* log = nullptr;
};

/// Runs DPOM or DPUM (by corrector kind) and writes config.json, report.json
/// and one ensemble_NNN.csv per checkpoint into the output directory.
int cmd_sample(const CommandOptions& options);
/// Writes config.json, sweep.csv and slope.json.
int cmd_sweep(const CommandOptions& options);
/// Runs the diagnostic suite and writes verify.json; exit 4 if any check fails.
int cmd_verify(const CommandOptions& options);

/// Ensemble CSV: "# key=value" metadata lines, a header row x1..xd, then one
/// particle per row with %.17g values.
std::string ensemble_csv(const Ensemble& e, const std::vector<std::pair<std::string, std::string>>& meta);

/// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

struct VerifyCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Runs every diagnostic for the configured mixture and oracle perturbation.
std::vector<VerifyCheck> run_verify_suite(const AppConfig& cfg);
std::string verify_json(const std::vector<VerifyCheck>& checks);

}  // namespace pcflow
