#include "pcflow/sweep.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "pcflow/errors.hpp"
#include "pcflow/evaluation.hpp"

namespace pcflow {
namespace {

RunConfig quiet(RunConfig cfg) {
  cfg.checkpoints.clear();
  cfg.keep_snapshots = false;
  cfg.metrics.enabled = false;
  return cfg;
}

Estimate h_pred_point(const RunConfig& base, double h) {
  RunConfig cfg = quiet(base);
  cfg.h_pred = h;
  const SampleResult approx = run_sampler(cfg);
  cfg.predictor_method = PredictorMethod::reference_rk4;
  const SampleResult exact = run_sampler(cfg);
  return coupling_w2(approx.final, exact.final);
}

Estimate h_corr_point(const RunConfig& base, double h, std::size_t substeps) {
  RunConfig cfg = quiet(base);
  cfg.h_corr = h;
  cfg.corrector_steps.reset();
  cfg.girsanov_substeps = substeps;
  const SampleResult r = run_sampler(cfg);
  return girsanov_tv_bound(r.girsanov_kl);
}

Estimate epsilon_point(const RunConfig& base, double eps, const Ensemble& baseline) {
  RunConfig cfg = quiet(base);
  Perturbation p = cfg.perturbation;
  if (p.kind == Perturbation::Kind::none) p.kind = Perturbation::Kind::constant_bias;
  p.epsilon = eps;
  cfg.perturbation = p;
  const SampleResult r = run_sampler(cfg);
  return coupling_w2(r.final, baseline);
}

}  // namespace

std::string_view to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::h_pred: return "h_pred";
    case SweepParameter::h_corr: return "h_corr";
    case SweepParameter::epsilon_sc: return "epsilon_sc";
  }
  return "?";
}

SweepParameter sweep_parameter_from_string(std::string_view name) {
  if (name == "h_pred") return SweepParameter::h_pred;
  if (name == "h_corr") return SweepParameter::h_corr;
  if (name == "epsilon_sc") return SweepParameter::epsilon_sc;
  throw ConfigError("sweep.parameter", "unknown parameter '" + std::string(name) + "'");
}

SweepReport run_sweep(const RunConfig& base, const SweepSpec& spec) {
  if (spec.values.size() < 4) throw ConfigError("sweep.values", "at least 4 values are required");
  for (double v : spec.values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("sweep.values", "values must be positive");
  }
  if (spec.parameter == SweepParameter::h_corr && base.algorithm == Algorithm::predictor_only) {
    throw ConfigError("sweep.parameter", "h_corr sweep needs a corrector");
  }
  if (spec.parameter == SweepParameter::h_corr && spec.girsanov_substeps == 0) {
    throw ConfigError("sweep.girsanov_substeps", "must be >= 1");
  }

  SweepReport report;
  report.parameter = std::string(to_string(spec.parameter));
  switch (spec.parameter) {
    case SweepParameter::h_pred: report.metric = "coupling_w2_vs_rk4_flow"; break;
    case SweepParameter::h_corr: report.metric = "girsanov_tv_bound"; break;
    case SweepParameter::epsilon_sc: report.metric = "coupling_w2_vs_exact_score"; break;
  }

  Ensemble baseline;
  if (spec.parameter == SweepParameter::epsilon_sc) {
    RunConfig cfg = quiet(base);
    cfg.perturbation.kind = Perturbation::Kind::none;
    cfg.perturbation.epsilon = 0.0;
    baseline = run_sampler(cfg).final;
  }

  std::vector<std::pair<double, double>> fit_points;
  for (double v : spec.values) {
    Estimate est;
    switch (spec.parameter) {
      case SweepParameter::h_pred: est = h_pred_point(base, v); break;
      case SweepParameter::h_corr: est = h_corr_point(base, v, spec.girsanov_substeps); break;
      case SweepParameter::epsilon_sc: est = epsilon_point(base, v, baseline); break;
    }
    report.points.push_back({v, est.value, est.stderr_});
    fit_points.emplace_back(v, est.value);
  }
  const SlopeFit fit = slope_regression(fit_points);
  report.slope = fit.slope;
  report.slope_stderr = fit.stderr_;
  report.intercept = fit.intercept;
  return report;
}

}  // namespace pcflow
