#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "pcflow/corrector.hpp"
#include "pcflow/ensemble.hpp"
#include "pcflow/gmm.hpp"
#include "pcflow/report.hpp"
#include "pcflow/score_oracle.hpp"

namespace pcflow {

enum class Algorithm { dpom, dpum, predictor_only };
std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view name);

enum class PredictorMethod { exponential, reference_rk4 };
std::string_view to_string(PredictorMethod m);
PredictorMethod predictor_method_from_string(std::string_view name);

struct MetricOptions {
  bool enabled = true;
  std::size_t slices = 64;
  /// Exact reference samples drawn per checkpoint; 0 means ensemble size.
  std::size_t reference_size = 0;
  /// Histogram bins per axis for d = 1, 2, 3 and for per-axis TV.
  std::size_t bins_1d = 100;
  std::size_t bins_2d = 30;
  std::size_t bins_3d = 12;
  std::size_t bins_axis = 50;
};

/// Every tunable of the two algorithms. Unset optionals are derived from the
/// mixture, epsilon and the Lipschitz estimate.
struct RunConfig {
  GaussianMixture mixture = GaussianMixture::standard_normal(1);
  Perturbation perturbation;
  Algorithm algorithm = Algorithm::dpom;
  PredictorMethod predictor_method = PredictorMethod::exponential;
  double reference_substep = 1e-4;

  /// Target accuracy driving default T, h_pred, h_corr and delta.
  double epsilon = 0.1;
  std::optional<double> lipschitz;
  /// Predictor epoch length, 1/L by default.
  std::optional<double> epoch_length;
  std::optional<double> h_pred;
  /// Either horizon T or rounds N0 may be given; T = N0 * epoch + h_pred.
  std::optional<double> horizon;
  std::optional<std::size_t> rounds;
  std::optional<double> delta;

  std::optional<double> h_corr;
  std::optional<double> corrector_time;
  std::optional<std::size_t> corrector_steps;
  /// T_corr = multiplier / L (overdamped) or multiplier / sqrt(L) (underdamped).
  double corrector_multiplier = 0.5;
  std::optional<double> friction;
  double velocity_init_std = 1.0;
  std::size_t girsanov_substeps = 0;

  std::size_t ensemble_size = 1000;
  std::uint64_t seed = 0;
  /// Requested reverse times; each is snapped to the first epoch boundary at
  /// or after it, or to the final time T - delta.
  std::vector<double> checkpoints;
  unsigned threads = 1;
  MetricOptions metrics;
  /// Keep a copy of the ensemble at every checkpoint.
  bool keep_snapshots = true;
};

/// eps^2 / (L^2 max(d, m2^2)). With h_pred > 0 the value is rounded down to
/// h_pred / 2^k for the smallest k >= 1 that does not exceed it.
double default_delta(double epsilon, double lipschitz, std::size_t d, double m2, double h_pred = 0.0);

/// Resolves defaults and divisibility. Throws ConfigError naming the
/// offending key when the configuration is inconsistent.
Plan resolve_plan(const RunConfig& cfg);

struct SampleResult {
  Ensemble final;
  RunReport report;
  /// Aligned with report.checkpoints when keep_snapshots is set.
  std::vector<Ensemble> snapshots;
  /// Per-particle path-space KL (empty unless girsanov_substeps > 0).
  std::vector<double> girsanov_kl;
};

SampleResult run_sampler(const RunConfig& cfg);
/// run_sampler with the algorithm forced to dpom / dpum.
SampleResult dpom(RunConfig cfg);
SampleResult dpum(RunConfig cfg);

/// Exact q_t samples on the stream (i, reference, tag).
Ensemble reference_ensemble(const GaussianMixture& q, std::size_t n, std::uint64_t seed, std::uint64_t tag,
                            double reverse_time = 0.0);

}  // namespace pcflow
