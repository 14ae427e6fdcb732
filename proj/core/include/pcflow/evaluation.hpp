#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pcflow/ensemble.hpp"
#include "pcflow/gmm.hpp"
#include "pcflow/vec.hpp"

namespace pcflow {

inline constexpr std::size_t kExactAssignmentCap = 4096;

/// Root mean matched squared distance under the optimal one-to-one
/// assignment (shortest augmenting path Hungarian method, O(n^3)).
/// Requires equal sizes and dims, n <= kExactAssignmentCap.
double w2_exact(const Ensemble& a, const Ensemble& b);

/// Optimal assignment itself: perm[i] is the index in b matched to a[i].
std::vector<std::size_t> optimal_assignment(const Ensemble& a, const Ensemble& b);

/// Sliced estimate: sqrt(d * mean_k W2^2(<theta_k, a>, <theta_k, b>)) over k
/// random unit directions. The factor d makes it agree with W2 for isotropic
/// pairs (a translation by m has mean projected cost |m|^2 / d). Sizes may differ.
double w2_sliced(const Ensemble& a, const Ensemble& b, std::size_t slices, std::uint64_t seed);

/// 1-d W2^2 between two empirical measures via their quantile functions.
double w2_squared_1d(std::vector<double> a, std::vector<double> b);

struct W2Options {
  enum class Mode { exact, sliced };
  Mode mode = Mode::sliced;
  std::size_t slices = 64;
  std::uint64_t seed = 0;
};

double w2_estimate(const Ensemble& a, const Ensemble& b, const W2Options& options = {});

/// Value with its Monte Carlo standard error.
struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// sqrt(mean_i |a_i - b_i|^2) for particle-aligned ensembles: the cost of the
/// identity coupling, an upper bound on W2 of the two laws. Used to compare
/// runs that share every random stream.
Estimate coupling_w2(const Ensemble& a, const Ensemble& b);

/// Pinsker bound sqrt(KL / 2) from per-particle path-space KL samples.
Estimate girsanov_tv_bound(std::span<const double> kl_per_particle);

/// Shared rectangular grid: every axis spans [lo, hi] with `bins` cells.
/// Mass outside the grid is pooled into one overflow cell.
struct GridSpec {
  Vec lo;
  Vec hi;
  std::size_t bins = 50;
};

/// Grid covering mean +- 6 sd of every component on every axis.
GridSpec grid_for(const GaussianMixture& q, std::size_t bins);

/// Half-L1 distance between normalized histograms. Requires d <= 3.
double tv_histogram(const Ensemble& a, const Ensemble& b, const GridSpec& grid);
/// Same against exact cell masses of a mixture (products of Gaussian CDFs).
double tv_histogram(const Ensemble& a, const GaussianMixture& q, const GridSpec& grid);

/// Histogram TV of each 1-d marginal; each is a lower bound on joint TV.
std::vector<double> axis_tv(const Ensemble& a, const GaussianMixture& q, std::size_t bins);

/// Fraction of particles whose nearest component mean is component i.
std::vector<double> mode_weights(const Ensemble& ensemble, const GaussianMixture& mixture);

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares of ln(error) on ln(parameter). Needs >= 4 points,
/// all strictly positive.
SlopeFit slope_regression(std::span<const std::pair<double, double>> points);

}  // namespace pcflow
