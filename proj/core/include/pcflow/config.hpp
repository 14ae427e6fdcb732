#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcflow/sampler.hpp"
#include "pcflow/sweep.hpp"

namespace pcflow {

/// How the mixture was specified, kept so the canonical emitter reproduces it.
struct MixtureSpec {
  /// "standard_normal", "appendix" or "two_component"; empty for explicit components.
  std::string preset;
  std::size_t dimension = 0;
};

struct OutputSpec {
  std::string output_dir = "out";
  bool write_ensembles = true;
};

/// Settings of the `verify` diagnostic suite.
struct VerifySpec {
  std::vector<double> reparam_times{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t reparam_particles = 100;
  double reparam_inner_step = 1e-5;
  double reparam_tolerance = 1e-4;
  double reparam_halving_factor = 3.0;

  std::vector<double> perturbation_times{0.05, 0.1, 0.5, 1.0, 2.0};
  std::size_t perturbation_particles = 1000;
  double perturbation_max_constant = 10.0;
  double perturbation_fd_tolerance = 0.01;

  std::vector<double> forward_horizons{1.0, 2.0, 3.0, 4.0};
  std::size_t forward_particles = 1000;
  double forward_slope_lo = -1.2;
  double forward_slope_hi = -0.8;

  double moment_tolerance = 0.01;

  std::size_t stationarity_particles = 4000;
};

struct AppConfig {
  MixtureSpec mixture_spec;
  RunConfig run;
  OutputSpec output;
  std::optional<SweepSpec> sweep;
  VerifySpec verify;
};

/// Parses the JSON configuration. Unknown keys and invalid values raise
/// ConfigError naming the dotted key.
AppConfig parse_config(std::string_view text);
AppConfig load_config(const std::filesystem::path& path);

/// Canonical JSON: every key present in a fixed order, null for derived values.
std::string emit_config(const AppConfig& cfg);

/// Built-in presets: "appendix-replication", "theory-mode-dpom", "theory-mode-dpum".
AppConfig preset_config(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace pcflow
