#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pcflow/ensemble.hpp"
#include "pcflow/score_oracle.hpp"
#include "pcflow/vec.hpp"

namespace pcflow {

/// Step sizes for one predictor stage, starting at reverse time start_time.
struct Schedule {
  enum class Kind { uniform, geometric };

  Kind kind = Kind::uniform;
  double start_time = 0.0;
  double end_time = 0.0;
  std::vector<double> steps;

  double total() const noexcept { return end_time - start_time; }
  std::size_t size() const noexcept { return steps.size(); }
};

/// One exponential-integrator step of the probability flow ODE
/// dx/dt = x + s_t(x) with the score frozen at the left endpoint:
/// x <- e^h x + (e^h - 1) s_t(x). Throws std::out_of_range if t + h > T.
Vec predictor_step(std::span<const double> x, double t, double h, const ScoreOracle& oracle);

/// In-place variant with the score already frozen at the step's start time.
void predictor_step(std::span<double> x, double h, const FrozenScore& score);

/// epoch_length / h_pred equal steps. The ratio must be an integer within a
/// relative tolerance of 1e-9.
Schedule uniform_schedule(double t0, double epoch_length, double h_pred);

/// Early-stopping stage covering [t0, t0 + h_pred - delta]. The remaining gap
/// to t0 + h_pred is halved each step, never going below delta, and the last
/// step is clamped to land exactly on t0 + h_pred - delta. Every step satisfies
/// h_{n+1} <= (remaining gap)/2. Requires 0 < delta <= h_pred / 2.
Schedule geometric_schedule(double h_pred, double delta, double t0 = 0.0);

/// Folds predictor steps over the schedule. The ensemble must sit at
/// schedule.start_time and ends at schedule.end_time.
void run_predictor(Ensemble& ensemble, const Schedule& schedule, const ScoreOracle& oracle,
                   unsigned threads = 1);
Vec run_predictor(std::span<const double> x, const Schedule& schedule, const ScoreOracle& oracle);

/// Classical RK4 integration of dx/dt = x + s_t(x) across each schedule step,
/// subdividing so no substep exceeds max_substep. Used as the reference flow
/// when measuring predictor discretization error.
void run_reference_flow(Ensemble& ensemble, const Schedule& schedule, const ScoreOracle& oracle,
                        double max_substep, unsigned threads = 1);

/// RK4 over [t0, t1] for a single point with n equal substeps.
Vec reference_flow(std::span<const double> x, double t0, double t1, const ScoreOracle& oracle,
                   std::size_t substeps);

}  // namespace pcflow
