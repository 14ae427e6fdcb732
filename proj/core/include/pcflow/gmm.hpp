#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcflow/rng.hpp"
#include "pcflow/vec.hpp"

namespace pcflow {

/// One mixture component with diagonal covariance. `variance` holds per-axis
/// variances; an isotropic component simply repeats the same value.
struct Component {
  double weight = 1.0;
  Vec mean;
  Vec variance;
};

/// Finite Gaussian mixture with diagonal component covariances. Immutable
/// after construction; all evaluation routines are safe for concurrent use.
///
/// Weights must be nonnegative and sum to one within 1e-12; components with
/// zero weight are kept (so parameter vectors stay aligned) but never sampled
/// and never contribute to densities.
class GaussianMixture {
 public:
  explicit GaussianMixture(std::vector<Component> components);

  static GaussianMixture standard_normal(std::size_t d);

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t size() const noexcept { return components_.size(); }
  const std::vector<Component>& components() const noexcept { return components_; }
  const Component& operator[](std::size_t i) const { return components_.at(i); }

  double log_density(std::span<const double> x) const;

  /// Gradient of log_density, with responsibilities via max-shifted log-sum-exp.
  Vec score(std::span<const double> x) const;
  void score(std::span<const double> x, std::span<double> out) const;

  /// Row-major d*d Hessian of log_density.
  std::vector<double> hessian(std::span<const double> x) const;
  /// Largest absolute eigenvalue of the Hessian.
  double hessian_op_norm(std::span<const double> x) const;

  /// Posterior component probabilities at x.
  Vec responsibilities(std::span<const double> x) const;

  Vec sample(RngStream& rng) const;
  /// Deterministic transform of a uniform u in (0,1) and a standard normal
  /// vector xi into a mixture sample: component by inverse CDF on the
  /// weights, then mean + sd * xi.
  Vec sample_from(double u, std::span<const double> xi) const;
  std::size_t pick_component(double u) const;

  Vec mean() const;
  /// Per-axis variance of the mixture (law of total variance).
  Vec axis_variance() const;
  /// E||x||^2.
  double second_moment() const;

 private:
  /// log w_i + log N(x; mu_i, Sigma_i) for every component into `out`.
  void component_log_terms(std::span<const double> x, std::span<double> out) const;

  std::vector<Component> components_;
  std::size_t dim_ = 0;
  std::vector<double> log_weight_;
  std::vector<double> log_norm_;
  std::vector<double> inv_var_;  // row-major K x d
};

/// Law of the forward OU process dx = -x dt + sqrt(2) dB at time t started
/// from q0: (w, mu, s2) -> (w, e^{-t} mu, e^{-2t} s2 + 1 - e^{-2t}).
GaussianMixture ou_marginal(const GaussianMixture& q0, double t);

/// Heat-flow marginal p0 * N(0, s I): variances grow by s.
GaussianMixture heat_marginal(const GaussianMixture& p0, double s);

struct SmoothnessInfo {
  /// Empirical max of ||Hessian||_op over the probed (t, x) grid, clamped to >= 1.
  double lipschitz_L = 1.0;
  /// sqrt(E ||x||^2) under q0.
  double second_moment_m2 = 0.0;
};

struct SmoothnessOptions {
  std::size_t points_per_time = 2000;
  /// Points on each segment between two component means, where the Hessian
  /// of a separated mixture peaks and samples rarely land.
  std::size_t points_per_segment = 33;
  std::uint64_t seed = 0x5eed;
};

SmoothnessInfo smoothness(const GaussianMixture& q0, std::span<const double> t_grid,
                          const SmoothnessOptions& options = {});

/// Forward-time grid used when no grid is supplied: t = 0 followed by 19
/// log-spaced times in [1e-3, 5].
std::vector<double> default_smoothness_grid();

/// Five well-separated components whose first two coordinates sit on a
/// pentagon of radius 2.5, unequal weights (one light, isolated mode) and
/// small isotropic variances. Requires d >= 2.
GaussianMixture appendix_mixture(std::size_t d);

/// Two equal-weight components at +-1 along the first axis, variance 0.5.
GaussianMixture two_component_mixture(std::size_t d);

}  // namespace pcflow
