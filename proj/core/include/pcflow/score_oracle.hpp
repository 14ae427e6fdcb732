#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "pcflow/gmm.hpp"
#include "pcflow/vec.hpp"

namespace pcflow {

/// Controlled error added to the exact score.
///
///   none           s_t = grad ln q_t
///   constant_bias  s_t = grad ln q_t + epsilon * u
///   sinusoidal     s_t = grad ln q_t + epsilon * sin(omega <u, x>) * u
///   sign_flip      s_t = -grad ln q_t   (fault injection for diagnostics)
///
/// u is a unit vector, either given explicitly or drawn from direction_seed.
struct Perturbation {
  enum class Kind { none, constant_bias, sinusoidal, sign_flip };

  Kind kind = Kind::none;
  double epsilon = 0.0;
  double omega = 0.0;
  Vec direction;
  std::uint64_t direction_seed = 1;

  static Perturbation constant_bias(double epsilon, Vec direction);
  static Perturbation sinusoidal(double epsilon, double omega, Vec direction);
};

std::string_view to_string(Perturbation::Kind kind);
Perturbation::Kind perturbation_kind_from_string(std::string_view name);

/// Unit direction for a perturbation: the explicit direction normalized, or a
/// Gaussian draw keyed by direction_seed.
Vec resolve_direction(const Perturbation& p, std::size_t d);

/// Score field frozen at a single reverse time.
class FrozenScore {
 public:
  FrozenScore(GaussianMixture marginal, Perturbation perturbation);

  void eval(std::span<const double> x, std::span<double> out) const;
  Vec eval(std::span<const double> x) const;

  const GaussianMixture& marginal() const noexcept { return marginal_; }
  std::size_t dimension() const noexcept { return marginal_.dimension(); }

 private:
  GaussianMixture marginal_;
  Perturbation perturbation_;
};

/// Time-indexed score estimate in reverse time: s_t approximates
/// grad ln q_t with q_t = ou_marginal(base, T - t). This is the only place the
/// reverse/forward conversion happens.
class ScoreOracle {
 public:
  ScoreOracle(GaussianMixture base, double horizon, Perturbation perturbation = {},
              double base_lipschitz = 1.0);

  /// Throws std::out_of_range unless 0 <= t <= T (1e-12 slack).
  Vec eval(double t, std::span<const double> x) const;
  FrozenScore at(double t) const;

  /// Exact grad ln q_t at reverse time t, without perturbation.
  Vec exact(double t, std::span<const double> x) const;
  /// Perturbation field value at x.
  Vec perturbation_at(std::span<const double> x) const;

  const GaussianMixture& base() const noexcept { return base_; }
  double horizon() const noexcept { return horizon_; }
  const Perturbation& perturbation() const noexcept { return perturbation_; }
  double base_lipschitz() const noexcept { return base_lipschitz_; }
  std::size_t dimension() const noexcept { return base_.dimension(); }

  /// Marginal at reverse time t.
  GaussianMixture marginal(double t) const;

 private:
  double forward_time(double t) const;

  GaussianMixture base_;
  double horizon_;
  Perturbation perturbation_;
  double base_lipschitz_;
};

/// max(L, L + epsilon * omega) for the sinusoidal field; L otherwise.
double effective_lipschitz(const ScoreOracle& oracle);

}  // namespace pcflow
