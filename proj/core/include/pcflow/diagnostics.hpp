#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcflow/corrector.hpp"
#include "pcflow/evaluation.hpp"
#include "pcflow/gmm.hpp"
#include "pcflow/score_oracle.hpp"

namespace pcflow {

// ---------------------------------------------------------------------------
// Score perturbation along the OU probability flow.

struct ScorePerturbationRecord {
  double t = 0.0;
  /// Monte Carlo mean of |d/dt grad ln q_t(y_t)|^2 along the flow.
  double mean_sq = 0.0;
  /// Same estimate with half the finite-difference step.
  double mean_sq_half_step = 0.0;
  /// L^2 d max(L, 1/t).
  double bound = 0.0;
  double ratio = 0.0;
};

struct ScorePerturbationReport {
  double lipschitz_L = 1.0;
  std::vector<ScorePerturbationRecord> records;
  /// max ratio over the grid.
  double c_emp = 0.0;
  /// max relative change when the finite-difference step is halved.
  double fd_relative_change = 0.0;
};

struct ScorePerturbationOptions {
  std::size_t particles = 1000;
  std::uint64_t seed = 11;
  /// Finite-difference step relative to t.
  double relative_step = 1e-4;
  /// Max RK4 step for transporting particles along the flow.
  double ode_step = 1e-3;
  /// Lipschitz constant; estimated with smoothness() when <= 0.
  double lipschitz = 0.0;
};

/// Transports exact q_0 samples along dy/dt = -y - grad ln q_t(y) and
/// estimates the total time derivative of the score along each trajectory by
/// central differences.
ScorePerturbationReport score_perturbation_diagnostic(const GaussianMixture& mixture,
                                                      std::span<const double> t_grid,
                                                      const ScorePerturbationOptions& options = {});

// ---------------------------------------------------------------------------
// Heat-flow / OU-flow reparameterization.

struct ReparamReport {
  std::vector<double> t_grid;
  /// max over particles of |y_t - e^{-t} x_{e^{2t}-1}| per grid time.
  std::vector<double> deviation;
  double max_deviation = 0.0;
};

struct ReparamOptions {
  std::size_t particles = 100;
  std::uint64_t seed = 13;
  double inner_step = 1e-5;
};

/// Integrates dx/ds = -1/2 grad ln p_s(x) (p_s = p_0 * N(0, sI)) and the OU
/// flow dy/dt = -y + s(T - t, y) driven by the oracle's score from the same
/// initial points with Heun's method, and compares y_t with e^{-t} x_{e^{2t}-1}.
/// The OU score is read from the oracle at forward time t, so the oracle's
/// horizon must cover max(t_grid).
ReparamReport reparam_check(const ScoreOracle& oracle, std::span<const double> t_grid,
                            const ReparamOptions& options = {});

// ---------------------------------------------------------------------------
// Forward-process convergence to the standard Gaussian.

struct ForwardConvergenceRecord {
  double horizon = 0.0;
  double w2 = 0.0;
};

struct ForwardConvergenceReport {
  std::vector<ForwardConvergenceRecord> records;
  /// Slope of ln W2 against T; NaN when every estimate sits at the floor.
  double slope = 0.0;
  double slope_stderr = 0.0;
  bool at_floor = false;
};

struct ForwardConvergenceOptions {
  std::size_t particles = 1000;
  std::uint64_t seed = 17;
  /// Estimates at or below this value are treated as exact zeros.
  double floor = 1e-9;
};

/// Exact W2 (optimal assignment) between samples of ou_marginal(mixture, T)
/// and of the standard Gaussian, both built from the same standard-normal
/// draws so the estimator's noise floor cancels. Needs at least 4 horizons.
ForwardConvergenceReport forward_convergence_check(const GaussianMixture& mixture,
                                                   std::span<const double> horizons,
                                                   const ForwardConvergenceOptions& options = {});

// ---------------------------------------------------------------------------
// Underdamped kernel moments against Euler-Maruyama.

struct MomentComparison {
  UnderdampedMoments closed_form;
  UnderdampedMoments euler_maruyama;
  double max_relative_error = 0.0;
};

/// Propagates the exact mean/covariance recursion of Euler-Maruyama on the
/// frozen-drift underdamped SDE with `inner_steps` substeps of h and compares
/// the result to the closed-form kernel moments. The recursion is the law of
/// the Euler-Maruyama chain, i.e. its infinite-path limit.
MomentComparison underdamped_moment_oracle(double z, double v, double g, double h, double gamma,
                                           std::size_t inner_steps = 10000);

/// Sampled Euler-Maruyama moments over `paths` paths.
UnderdampedMoments underdamped_em_sampled(double z, double v, double g, double h, double gamma,
                                          std::size_t inner_steps, std::size_t paths, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Corrector stationarity.

struct StationarityReport {
  double max_mean_error = 0.0;   // in units of the per-axis sd
  double max_var_ratio_error = 0.0;
  double mean_tolerance = 0.0;
  double var_tolerance = 0.0;
  bool passed = false;
};

struct StationarityOptions {
  std::size_t particles = 4000;
  std::uint64_t seed = 19;
  double reverse_time = 0.0;
  double total_time = 0.5;
  double step = 0.002;
};

/// Starts from exact samples of q_t, runs one overdamped corrector epoch with
/// the oracle's s_t and checks per-axis moments are preserved.
StationarityReport corrector_stationarity_check(const ScoreOracle& oracle,
                                                const StationarityOptions& options = {});

}  // namespace pcflow
