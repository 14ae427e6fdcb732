#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pcflow/corrector.hpp"
#include "pcflow/vec.hpp"

namespace pcflow {

/// Resolved schedule constants for one run, after defaults and divisibility
/// adjustments.
struct Plan {
  std::string algorithm;
  std::size_t dimension = 0;
  double epsilon = 0.0;
  double lipschitz = 1.0;
  double second_moment_m2 = 0.0;
  double epoch_length = 1.0;
  std::size_t rounds = 1;  // N0
  double horizon = 0.0;    // T = N0 * epoch + h_pred
  double h_pred = 0.0;
  double delta = 0.0;
  std::vector<double> stage2_steps;
  bool correctors = true;
  CorrectorConfig corrector;
  /// Human-readable notes on every value changed to satisfy divisibility.
  std::vector<std::string> adjustments;

  double final_time() const noexcept { return horizon - delta; }
  std::size_t steps_per_epoch() const;
};

struct CheckpointRecord {
  double requested_time = 0.0;
  double reverse_time = 0.0;
  /// Predictor steps taken when the snapshot was taken.
  std::size_t iteration = 0;
  double w2 = 0.0;
  /// Joint histogram TV; only for d <= 3.
  std::optional<double> tv;
  /// Per-axis 1-d TV, reported for d > 3 (each a lower bound on joint TV).
  std::vector<double> axis_tv;
  Vec mean;
  Vec variance;
  Vec target_mean;
  Vec target_variance;
  std::vector<double> mode_weights;
};

struct RunReport {
  Plan plan;
  std::size_t ensemble_size = 0;
  std::uint64_t seed = 0;
  std::vector<CheckpointRecord> checkpoints;
  double stage1_end_time = 0.0;
  double final_time = 0.0;
  /// Path-space KL of the corrector discretization, averaged over particles,
  /// and the matching Pinsker bound (present when substeps were requested).
  std::optional<double> girsanov_kl;
  std::optional<double> girsanov_tv;
  std::string metric_note;
};

/// Canonical JSON text (fixed key order, two-space indent, trailing newline).
std::string to_json_text(const RunReport& report);

struct SweepPoint {
  double parameter = 0.0;
  double error = 0.0;
  double stderr_ = 0.0;
};

struct SweepReport {
  std::string parameter;
  std::string metric;
  std::vector<SweepPoint> points;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

std::string to_json_text(const SweepReport& report);
/// "parameter,error,stderr" header plus one row per point.
std::string to_csv_text(const SweepReport& report);

/// Shared number formatting for text outputs (%.17g).
std::string format_double(double value);

}  // namespace pcflow
