#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

#include "pcflow/ensemble.hpp"
#include "pcflow/rng.hpp"
#include "pcflow/score_oracle.hpp"
#include "pcflow/vec.hpp"

namespace pcflow {

enum class CorrectorKind { overdamped, underdamped };

std::string_view to_string(CorrectorKind kind);
CorrectorKind corrector_kind_from_string(std::string_view name);

struct CorrectorConfig {
  CorrectorKind kind = CorrectorKind::overdamped;
  double total_time = 0.0;
  double step = 0.01;
  /// Friction gamma (underdamped only).
  double friction = 1.0;
  /// Standard deviation of the fresh velocity drawn each epoch (underdamped only).
  double velocity_init_std = 1.0;
  /// When > 0, each step is simulated as this many exact substeps and the
  /// path-space KL between the frozen-score chain and the continuous-time
  /// diffusion is accumulated per particle.
  std::size_t girsanov_substeps = 0;

  /// total_time / step; throws if not an integer within 1e-9 relative.
  std::size_t num_steps() const;
  void validate() const;
};

/// T_corr = multiplier / L (overdamped) or multiplier / sqrt(L) (underdamped).
double default_corrector_time(CorrectorKind kind, double lipschitz, double multiplier = 0.5);

/// Friction used in theory mode: sqrt(L).
double theory_friction(double lipschitz);

/// x <- x + h * s + sqrt(2h) * xi with s the frozen score value at x.
void overdamped_step(std::span<double> x, double h, std::span<const double> score, RngStream& rng);
Vec overdamped_step(std::span<const double> x, double h, const FrozenScore& score, RngStream& rng);

/// Per-axis moments of one exact step of dz = v dt, dv = (g - gamma v) dt + sqrt(2 gamma) dB.
struct UnderdampedMoments {
  double mean_z = 0.0;
  double mean_v = 0.0;
  double var_z = 0.0;
  double cov_zv = 0.0;
  double var_v = 0.0;
};

UnderdampedMoments underdamped_moments(double z, double v, double g, double h, double gamma);

/// Precomputed exact Gaussian transition for a fixed (h, gamma), sampled via
/// the per-axis 2x2 Cholesky factor.
class UnderdampedKernel {
 public:
  UnderdampedKernel(double h, double gamma);

  /// Advances (z, v) in place given the frozen drift g.
  void step(std::span<double> z, std::span<double> v, std::span<const double> g, RngStream& rng) const;

  double h() const noexcept { return h_; }
  double gamma() const noexcept { return gamma_; }

 private:
  double h_, gamma_;
  double decay_;      // e^{-gamma h}
  double v_gain_;     // (1 - e^{-gamma h}) / gamma
  double g_to_z_;     // (h - v_gain) / gamma
  double g_to_v_;     // (1 - e^{-gamma h}) / gamma
  double chol_zz_, chol_vz_, chol_vv_;
};

std::pair<Vec, Vec> underdamped_step(std::span<const double> z, std::span<const double> v, double h,
                                     double gamma, std::span<const double> g, RngStream& rng);

/// Keys the random streams of one corrector epoch.
struct CorrectorStreams {
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

/// Runs one corrector epoch at fixed reverse time t (the ensemble's time is
/// not advanced). The score s_t is frozen for the epoch and refreshed at the
/// current position every step. Underdamped epochs draw a fresh velocity per
/// particle and discard it at the end.
///
/// If cfg.girsanov_substeps > 0 and kl is nonempty, kl[i] accumulates the
/// path-space KL of particle i.
void run_corrector(Ensemble& ensemble, const CorrectorConfig& cfg, const ScoreOracle& oracle, double t,
                   CorrectorStreams streams, unsigned threads = 1, std::span<double> kl = {});

}  // namespace pcflow
