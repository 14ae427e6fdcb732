#include "pcflow/corrector.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pcflow/parallel.hpp"

namespace pcflow {
namespace {

/// 1 - 2(1 - e^{-x})/x + (1 - e^{-2x})/(2x), which is ~x^2/3 for small x.
double position_variance_factor(double x) {
  if (x < 1e-3) {
    const double x2 = x * x;
    return x2 / 3.0 - x2 * x / 4.0 + 7.0 * x2 * x2 / 60.0 - 31.0 * x2 * x2 * x / 360.0;
  }
  return 1.0 + 2.0 * std::expm1(-x) / x - std::expm1(-2.0 * x) / (2.0 * x);
}

void require_positive(double h, double gamma) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("underdamped step: h must be > 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("underdamped step: friction must be > 0");
}

}  // namespace

std::string_view to_string(CorrectorKind kind) {
  return kind == CorrectorKind::overdamped ? "overdamped" : "underdamped";
}

CorrectorKind corrector_kind_from_string(std::string_view name) {
  if (name == "overdamped") return CorrectorKind::overdamped;
  if (name == "underdamped") return CorrectorKind::underdamped;
  throw std::invalid_argument("unknown corrector kind '" + std::string(name) + "'");
}

std::size_t CorrectorConfig::num_steps() const {
  if (!(step > 0.0)) throw std::invalid_argument("corrector step must be > 0");
  if (!(total_time >= 0.0)) throw std::invalid_argument("corrector total_time must be >= 0");
  const double ratio = total_time / step;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("corrector total_time " + std::to_string(total_time) +
                                " is not a multiple of step " + std::to_string(step));
  }
  return static_cast<std::size_t>(n);
}

void CorrectorConfig::validate() const {
  (void)num_steps();
  if (kind == CorrectorKind::underdamped) {
    if (!(friction > 0.0)) throw std::invalid_argument("corrector friction must be > 0");
    if (!(velocity_init_std >= 0.0)) throw std::invalid_argument("velocity_init_std must be >= 0");
  }
}

double default_corrector_time(CorrectorKind kind, double lipschitz, double multiplier) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("default_corrector_time: L must be > 0");
  return kind == CorrectorKind::overdamped ? multiplier / lipschitz : multiplier / std::sqrt(lipschitz);
}

double theory_friction(double lipschitz) { return std::sqrt(lipschitz); }

void overdamped_step(std::span<double> x, double h, std::span<const double> score, RngStream& rng) {
  if (!(h > 0.0)) throw std::invalid_argument("overdamped_step: h must be > 0");
  const double noise = std::sqrt(2.0 * h);
  for (std::size_t a = 0; a < x.size(); ++a) x[a] += h * score[a] + noise * rng.normal();
}

Vec overdamped_step(std::span<const double> x, double h, const FrozenScore& score, RngStream& rng) {
  Vec out(x.begin(), x.end());
  const Vec s = score.eval(x);
  overdamped_step(out, h, s, rng);
  return out;
}

UnderdampedMoments underdamped_moments(double z, double v, double g, double h, double gamma) {
  require_positive(h, gamma);
  const double x = gamma * h;
  const double one_minus_decay = -std::expm1(-x);
  const double v_gain = one_minus_decay / gamma;
  UnderdampedMoments m;
  m.mean_v = std::exp(-x) * v + one_minus_decay * g / gamma;
  m.mean_z = z + v_gain * v + (h - v_gain) * g / gamma;
  m.var_v = -std::expm1(-2.0 * x);
  m.cov_zv = one_minus_decay * one_minus_decay / gamma;
  m.var_z = 2.0 * h / gamma * position_variance_factor(x);
  return m;
}

UnderdampedKernel::UnderdampedKernel(double h, double gamma) : h_(h), gamma_(gamma) {
  require_positive(h, gamma);
  const UnderdampedMoments unit = underdamped_moments(0.0, 0.0, 0.0, h, gamma);
  const double x = gamma * h;
  decay_ = std::exp(-x);
  v_gain_ = -std::expm1(-x) / gamma;
  g_to_z_ = (h - v_gain_) / gamma;
  g_to_v_ = v_gain_;
  chol_zz_ = std::sqrt(unit.var_z);
  chol_vz_ = chol_zz_ > 0.0 ? unit.cov_zv / chol_zz_ : 0.0;
  chol_vv_ = std::sqrt(std::max(0.0, unit.var_v - chol_vz_ * chol_vz_));
}

void UnderdampedKernel::step(std::span<double> z, std::span<double> v, std::span<const double> g,
                             RngStream& rng) const {
  for (std::size_t a = 0; a < z.size(); ++a) {
    const double xi1 = rng.normal();
    const double xi2 = rng.normal();
    const double mz = z[a] + v_gain_ * v[a] + g_to_z_ * g[a];
    const double mv = decay_ * v[a] + g_to_v_ * g[a];
    z[a] = mz + chol_zz_ * xi1;
    v[a] = mv + chol_vz_ * xi1 + chol_vv_ * xi2;
  }
}

std::pair<Vec, Vec> underdamped_step(std::span<const double> z, std::span<const double> v, double h,
                                     double gamma, std::span<const double> g, RngStream& rng) {
  if (z.size() != v.size() || z.size() != g.size()) throw std::invalid_argument("underdamped_step: length mismatch");
  const UnderdampedKernel kernel(h, gamma);
  Vec zo(z.begin(), z.end());
  Vec vo(v.begin(), v.end());
  kernel.step(zo, vo, g, rng);
  return {std::move(zo), std::move(vo)};
}

void run_corrector(Ensemble& ensemble, const CorrectorConfig& cfg, const ScoreOracle& oracle, double t,
                   CorrectorStreams streams, unsigned threads, std::span<double> kl) {
  cfg.validate();
  const std::size_t steps = cfg.num_steps();
  if (steps == 0 || ensemble.empty()) return;
  const bool track = cfg.girsanov_substeps > 0 && !kl.empty();
  if (track && kl.size() != ensemble.size()) throw std::invalid_argument("run_corrector: kl accumulator size mismatch");

  const FrozenScore field = oracle.at(t);
  const std::size_t d = ensemble.dim();
  const std::size_t sub = cfg.girsanov_substeps > 0 ? cfg.girsanov_substeps : 1;
  const double hs = cfg.step / static_cast<double>(sub);
  // KL weight: 1/4 for noise sqrt(2), 1/(4 gamma) for noise sqrt(2 gamma) on v.
  const double kl_weight = cfg.kind == CorrectorKind::overdamped ? 0.25 : 0.25 / cfg.friction;

  std::optional<UnderdampedKernel> kernel;
  if (cfg.kind == CorrectorKind::underdamped) kernel.emplace(hs, cfg.friction);

  parallel_for(ensemble.size(), threads, [&](std::size_t begin, std::size_t end) {
    Vec g(d), s(d), v(d);
    for (std::size_t i = begin; i < end; ++i) {
      auto x = ensemble[i];
      RngStream noise(streams.seed, {i, Phase::corrector_noise, streams.epoch});
      if (kernel) {
        RngStream vel(streams.seed, {i, Phase::corrector_velocity, streams.epoch});
        for (double& vi : v) vi = cfg.velocity_init_std * vel.normal();
      }
      double path_kl = 0.0;
      for (std::size_t k = 0; k < steps; ++k) {
        field.eval(x, g);
        double prev = 0.0;
        for (std::size_t j = 0; j < sub; ++j) {
          if (kernel) {
            kernel->step(x, v, g, noise);
          } else {
            overdamped_step(x, hs, g, noise);
          }
          if (track) {
            field.eval(x, s);
            const double f = squared_distance(g, s);
            path_kl += 0.5 * (prev + f) * hs;
            prev = f;
          }
        }
      }
      if (track) kl[i] += kl_weight * path_kl;
    }
  });
}

}  // namespace pcflow
