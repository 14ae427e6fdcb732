#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "pcflow/report.hpp"
#include "pcflow/sampler.hpp"

namespace pcflow {

/// Swept parameters and how each error is measured:
///
///   h_pred      RMS distance between the run and a run whose predictor is an
///               RK4 integration of the exact flow, with every random stream
///               shared (synchronous coupling, an upper bound on W2).
///   h_corr      Pinsker bound sqrt(KL / 2) on the TV between the
///               frozen-score corrector chain and its continuous-time
///               diffusion, from the path-space KL.
///   epsilon_sc  RMS distance between the constant-bias run and the
///               unperturbed run under synchronous coupling.
enum class SweepParameter { h_pred, h_corr, epsilon_sc };
std::string_view to_string(SweepParameter p);
SweepParameter sweep_parameter_from_string(std::string_view name);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::h_pred;
  std::vector<double> values;
  /// Exact substeps per corrector step used by the h_corr metric.
  std::size_t girsanov_substeps = 8;
};

/// Runs the sampler once per value with everything else held fixed and fits
/// the log-log slope. Throws ConfigError("sweep.values") for fewer than 4 or
/// nonpositive values.
SweepReport run_sweep(const RunConfig& base, const SweepSpec& spec);

}  // namespace pcflow
