#include "pcflow/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "pcflow/errors.hpp"
#include "pcflow/evaluation.hpp"
#include "pcflow/predictor.hpp"
#include "pcflow/rng.hpp"

namespace pcflow {
namespace {

constexpr double kTimeTol = 1e-9;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Largest value <= target that divides total into an integer number of pieces.
double divisor_step(double total, double target, std::size_t& pieces) {
  const double ratio = total / target;
  pieces = static_cast<std::size_t>(std::ceil(ratio - kTimeTol * std::max(1.0, ratio)));
  pieces = std::max<std::size_t>(pieces, 1);
  return total / static_cast<double>(pieces);
}

bool differs(double a, double b) { return std::abs(a - b) > 1e-12 * std::max(std::abs(a), std::abs(b)); }

void require_positive(const std::optional<double>& v, const char* key) {
  if (v && !(*v > 0.0 && std::isfinite(*v))) throw ConfigError(key, "must be a positive finite number");
}

CheckpointRecord measure(const Ensemble& e, const ScoreOracle& oracle, const RunConfig& cfg,
                         std::size_t index) {
  CheckpointRecord rec;
  rec.reverse_time = e.reverse_time();
  const GaussianMixture target = oracle.marginal(e.reverse_time());
  rec.mean = e.axis_mean();
  rec.variance = e.axis_variance();
  rec.target_mean = target.mean();
  rec.target_variance = target.axis_variance();
  if (!cfg.metrics.enabled) return rec;

  const std::size_t n_ref = cfg.metrics.reference_size ? cfg.metrics.reference_size : e.size();
  const Ensemble ref = reference_ensemble(target, n_ref, cfg.seed, index, e.reverse_time());
  rec.w2 = w2_sliced(e, ref, cfg.metrics.slices, cfg.seed);
  const std::size_t d = e.dim();
  if (d <= 3) {
    const std::size_t bins = d == 1 ? cfg.metrics.bins_1d : d == 2 ? cfg.metrics.bins_2d : cfg.metrics.bins_3d;
    rec.tv = tv_histogram(e, target, grid_for(target, bins));
  } else {
    rec.axis_tv = axis_tv(e, target, cfg.metrics.bins_axis);
  }
  rec.mode_weights = mode_weights(e, target);
  return rec;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::dpom: return "dpom";
    case Algorithm::dpum: return "dpum";
    case Algorithm::predictor_only: return "predictor_only";
  }
  return "?";
}

Algorithm algorithm_from_string(std::string_view name) {
  if (name == "dpom") return Algorithm::dpom;
  if (name == "dpum") return Algorithm::dpum;
  if (name == "predictor_only") return Algorithm::predictor_only;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(PredictorMethod m) {
  return m == PredictorMethod::exponential ? "exponential" : "reference_rk4";
}

PredictorMethod predictor_method_from_string(std::string_view name) {
  if (name == "exponential") return PredictorMethod::exponential;
  if (name == "reference_rk4") return PredictorMethod::reference_rk4;
  throw std::invalid_argument("unknown predictor method '" + std::string(name) + "'");
}

double default_delta(double epsilon, double lipschitz, std::size_t d, double m2, double h_pred) {
  if (!(epsilon > 0.0) || !(lipschitz > 0.0) || d == 0) {
    throw std::invalid_argument("default_delta: epsilon, L and d must be positive");
  }
  const double spread = std::max(static_cast<double>(d), m2 * m2);
  const double delta = epsilon * epsilon / (lipschitz * lipschitz * spread);
  if (h_pred <= 0.0) return delta;
  double rounded = h_pred / 2.0;
  while (rounded > delta * (1.0 + 1e-12)) rounded /= 2.0;
  return rounded;
}

Plan resolve_plan(const RunConfig& cfg) {
  Plan plan;
  const std::size_t d = cfg.mixture.dimension();
  plan.algorithm = std::string(to_string(cfg.algorithm));
  plan.dimension = d;
  if (!(cfg.epsilon > 0.0 && std::isfinite(cfg.epsilon))) throw ConfigError("predictor.epsilon", "must be positive");
  plan.epsilon = cfg.epsilon;
  require_positive(cfg.lipschitz, "predictor.lipschitz");
  require_positive(cfg.epoch_length, "predictor.epoch_length");
  require_positive(cfg.h_pred, "predictor.h_pred");
  require_positive(cfg.horizon, "predictor.horizon");
  require_positive(cfg.delta, "predictor.delta");
  require_positive(cfg.h_corr, "corrector.h_corr");
  require_positive(cfg.friction, "corrector.friction");
  if (cfg.corrector_time && !(*cfg.corrector_time >= 0.0)) {
    throw ConfigError("corrector.total_time", "must be >= 0");
  }
  if (!(cfg.velocity_init_std >= 0.0)) throw ConfigError("corrector.velocity_init_std", "must be >= 0");
  if (!(cfg.corrector_multiplier > 0.0)) throw ConfigError("corrector.multiplier", "must be positive");
  if (cfg.rounds && *cfg.rounds == 0) throw ConfigError("predictor.rounds", "must be >= 1");

  plan.second_moment_m2 = std::sqrt(cfg.mixture.second_moment());
  double L = 0.0;
  if (cfg.lipschitz) {
    L = std::max(1.0, *cfg.lipschitz);
  } else {
    const auto grid = default_smoothness_grid();
    L = smoothness(cfg.mixture, grid).lipschitz_L;
  }
  if (cfg.perturbation.kind == Perturbation::Kind::sinusoidal) {
    L = std::max(L, L + cfg.perturbation.epsilon * cfg.perturbation.omega);
  }
  plan.lipschitz = L;

  plan.epoch_length = cfg.epoch_length.value_or(1.0 / L);
  const double h_target =
      std::min(cfg.h_pred.value_or(cfg.epsilon / (L * L * std::sqrt(static_cast<double>(d)))), plan.epoch_length);
  std::size_t per_epoch = 0;
  plan.h_pred = divisor_step(plan.epoch_length, h_target, per_epoch);
  if (differs(plan.h_pred, cfg.h_pred.value_or(plan.h_pred)) || (cfg.h_pred && *cfg.h_pred > plan.epoch_length)) {
    plan.adjustments.push_back("h_pred " + fmt(*cfg.h_pred) + " -> " + fmt(plan.h_pred) + " to divide epoch " +
                               fmt(plan.epoch_length));
  }

  if (cfg.rounds) {
    plan.rounds = *cfg.rounds;
    if (cfg.horizon) {
      const double T = static_cast<double>(plan.rounds) * plan.epoch_length + plan.h_pred;
      if (std::abs(T - *cfg.horizon) > kTimeTol * std::max(1.0, T)) {
        throw ConfigError("predictor.horizon", "horizon " + fmt(*cfg.horizon) + " disagrees with rounds * epoch + h_pred = " +
                                                   fmt(T));
      }
    }
  } else if (cfg.horizon) {
    const double r = (*cfg.horizon - plan.h_pred) / plan.epoch_length;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > kTimeTol * std::max(1.0, r)) {
      throw ConfigError("predictor.horizon", "horizon " + fmt(*cfg.horizon) + " is not N0 * epoch + h_pred for an integer N0 >= 1");
    }
    plan.rounds = static_cast<std::size_t>(n);
  } else {
    const double spread = std::max(static_cast<double>(d), plan.second_moment_m2 * plan.second_moment_m2);
    const double T = std::log(spread / (cfg.epsilon * cfg.epsilon));
    plan.rounds = static_cast<std::size_t>(std::max(1.0, std::ceil((T - plan.h_pred) / plan.epoch_length - kTimeTol)));
  }
  plan.horizon = static_cast<double>(plan.rounds) * plan.epoch_length + plan.h_pred;

  if (cfg.delta) {
    if (*cfg.delta > plan.h_pred / 2.0 * (1.0 + 1e-12)) {
      throw ConfigError("predictor.delta", "delta " + fmt(*cfg.delta) + " exceeds h_pred / 2 = " + fmt(plan.h_pred / 2.0));
    }
    plan.delta = *cfg.delta;
  } else {
    plan.delta = default_delta(cfg.epsilon, L, d, plan.second_moment_m2, plan.h_pred);
  }
  plan.stage2_steps = geometric_schedule(plan.h_pred, plan.delta).steps;

  plan.correctors = cfg.algorithm != Algorithm::predictor_only;
  CorrectorConfig& c = plan.corrector;
  c.kind = cfg.algorithm == Algorithm::dpum ? CorrectorKind::underdamped : CorrectorKind::overdamped;
  c.friction = cfg.friction.value_or(theory_friction(L));
  c.velocity_init_std = cfg.velocity_init_std;
  c.girsanov_substeps = cfg.girsanov_substeps;
  if (cfg.corrector_steps && cfg.h_corr) {
    c.step = *cfg.h_corr;
    c.total_time = static_cast<double>(*cfg.corrector_steps) * c.step;
    if (cfg.corrector_time && differs(*cfg.corrector_time, c.total_time)) {
      throw ConfigError("corrector.total_time", "disagrees with steps * h_corr = " + fmt(c.total_time));
    }
  } else {
    c.total_time = cfg.corrector_time.value_or(default_corrector_time(c.kind, L, cfg.corrector_multiplier));
    if (cfg.corrector_steps) {
      if (*cfg.corrector_steps == 0) {
        c.total_time = 0.0;
      } else {
        c.step = c.total_time / static_cast<double>(*cfg.corrector_steps);
      }
    } else {
      const double dd = static_cast<double>(d);
      const double h_default = c.kind == CorrectorKind::overdamped
                                   ? cfg.epsilon * cfg.epsilon / (L * L * L * dd)
                                   : cfg.epsilon / (std::pow(L, 1.5) * std::sqrt(dd));
      const double target = cfg.h_corr.value_or(h_default);
      if (c.total_time > 0.0) {
        std::size_t pieces = 0;
        c.step = divisor_step(c.total_time, std::min(target, c.total_time), pieces);
        if (cfg.h_corr && differs(c.step, *cfg.h_corr)) {
          plan.adjustments.push_back("h_corr " + fmt(*cfg.h_corr) + " -> " + fmt(c.step) + " to divide corrector time " +
                                     fmt(c.total_time));
        }
      } else {
        c.step = target;
      }
    }
  }
  if (plan.correctors) {
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("corrector", e.what());
    }
  }
  return plan;
}

Ensemble reference_ensemble(const GaussianMixture& q, std::size_t n, std::uint64_t seed, std::uint64_t tag,
                            double reverse_time) {
  Ensemble out(n, q.dimension(), reverse_time);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(seed, {i, Phase::reference, tag});
    const Vec x = q.sample(rng);
    std::copy(x.begin(), x.end(), out[i].begin());
  }
  return out;
}

SampleResult run_sampler(const RunConfig& cfg) {
  const Plan plan = resolve_plan(cfg);
  const std::size_t d = plan.dimension;
  const std::size_t n = cfg.ensemble_size;
  const ScoreOracle oracle(cfg.mixture, plan.horizon, cfg.perturbation, plan.lipschitz);

  // Checkpoint boundaries: k * epoch for k = 0..N0, then the final time.
  const std::size_t final_slot = plan.rounds + 1;
  std::vector<std::vector<std::size_t>> at_slot(final_slot + 1);
  for (std::size_t j = 0; j < cfg.checkpoints.size(); ++j) {
    const double t = cfg.checkpoints[j];
    if (!(t >= 0.0) || t > plan.final_time() + kTimeTol) {
      throw ConfigError("run.checkpoints", "time " + fmt(t) + " outside [0, " + fmt(plan.final_time()) + "]");
    }
    const double k = std::ceil(t / plan.epoch_length - kTimeTol);
    const auto slot = static_cast<std::size_t>(std::max(0.0, k));
    at_slot[std::min(slot, final_slot)].push_back(j);
  }

  SampleResult result;
  RunReport& report = result.report;
  report.plan = plan;
  report.ensemble_size = n;
  report.seed = cfg.seed;
  report.metric_note = d <= 3 ? "tv is a histogram estimate of joint TV"
                              : "axis_tv holds 1-d marginal TVs, each a lower bound on joint TV; joint TV not estimated";
  std::vector<CheckpointRecord> records(cfg.checkpoints.size());
  std::vector<Ensemble> snaps(cfg.checkpoints.size());

  Ensemble e(n, d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(cfg.seed, {i, Phase::init, 0});
    fill_gaussian(rng, e[i]);
  }
  if (cfg.girsanov_substeps > 0) result.girsanov_kl.assign(n, 0.0);

  const std::size_t per_epoch = plan.steps_per_epoch();
  auto snapshot = [&](std::size_t slot, std::size_t iteration) {
    for (std::size_t j : at_slot[slot]) {
      if (n > 0) {
        records[j] = measure(e, oracle, cfg, j);
      } else {
        records[j].reverse_time = e.reverse_time();
      }
      records[j].requested_time = cfg.checkpoints[j];
      records[j].iteration = iteration;
      if (cfg.keep_snapshots) snaps[j] = e;
    }
  };
  auto predict = [&](const Schedule& s) {
    if (cfg.predictor_method == PredictorMethod::exponential) {
      run_predictor(e, s, oracle, cfg.threads);
    } else {
      run_reference_flow(e, s, oracle, cfg.reference_substep, cfg.threads);
    }
  };
  auto correct = [&](std::uint64_t epoch) {
    if (!plan.correctors) return;
    run_corrector(e, plan.corrector, oracle, e.reverse_time(), {cfg.seed, epoch}, cfg.threads, result.girsanov_kl);
  };

  snapshot(0, 0);
  for (std::size_t k = 0; k < plan.rounds; ++k) {
    const double t0 = static_cast<double>(k) * plan.epoch_length;
    Schedule s = uniform_schedule(t0, plan.epoch_length, plan.h_pred);
    s.end_time = static_cast<double>(k + 1) * plan.epoch_length;
    predict(s);
    e.require_finite("predictor epoch " + std::to_string(k) + " ending at t=" + fmt(e.reverse_time()));
    correct(k);
    e.require_finite("corrector epoch " + std::to_string(k) + " at t=" + fmt(e.reverse_time()));
    snapshot(k + 1, (k + 1) * per_epoch);
  }
  report.stage1_end_time = e.reverse_time();

  Schedule stage2 = geometric_schedule(plan.h_pred, plan.delta, e.reverse_time());
  stage2.end_time = plan.final_time();
  predict(stage2);
  e.require_finite("geometric stage ending at t=" + fmt(e.reverse_time()));
  correct(plan.rounds);
  e.require_finite("final corrector at t=" + fmt(e.reverse_time()));
  report.final_time = e.reverse_time();
  snapshot(final_slot, plan.rounds * per_epoch + stage2.size());

  if (!result.girsanov_kl.empty()) {
    double mean = 0.0;
    for (double v : result.girsanov_kl) mean += v;
    mean /= static_cast<double>(result.girsanov_kl.size());
    report.girsanov_kl = mean;
    report.girsanov_tv = girsanov_tv_bound(result.girsanov_kl).value;
  }
  if (n > 0) report.checkpoints = std::move(records);
  if (cfg.keep_snapshots && n > 0) result.snapshots = std::move(snaps);
  result.final = std::move(e);
  return result;
}

SampleResult dpom(RunConfig cfg) {
  cfg.algorithm = Algorithm::dpom;
  return run_sampler(cfg);
}

SampleResult dpum(RunConfig cfg) {
  cfg.algorithm = Algorithm::dpum;
  return run_sampler(cfg);
}

}  // namespace pcflow
