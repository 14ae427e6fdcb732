#include "pcflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pcflow/rng.hpp"

namespace pcflow {
namespace {

/// dy/dt = -y - grad ln q_t(y) with q_t = ou_marginal(q0, t).
void ou_flow_rhs(const GaussianMixture& qt, std::span<const double> y, std::span<double> out) {
  qt.score(y, out);
  for (std::size_t a = 0; a < y.size(); ++a) out[a] = -y[a] - out[a];
}

/// Marginals at the start, midpoint and end of one RK4 step.
struct FlowStep {
  GaussianMixture start, mid, end;
  double h;
  FlowStep(const GaussianMixture& q0, double t, double h_)
      : start(ou_marginal(q0, t)), mid(ou_marginal(q0, t + 0.5 * h_)), end(ou_marginal(q0, t + h_)), h(h_) {}
};

/// One RK4 step of the forward OU probability flow (h may be negative).
void ou_flow_rk4(const FlowStep& f, std::span<double> y) {
  const std::size_t d = y.size();
  const double h = f.h;
  Vec k1(d), k2(d), k3(d), k4(d), tmp(d);
  ou_flow_rhs(f.start, y, k1);
  for (std::size_t a = 0; a < d; ++a) tmp[a] = y[a] + 0.5 * h * k1[a];
  ou_flow_rhs(f.mid, tmp, k2);
  for (std::size_t a = 0; a < d; ++a) tmp[a] = y[a] + 0.5 * h * k2[a];
  ou_flow_rhs(f.mid, tmp, k3);
  for (std::size_t a = 0; a < d; ++a) tmp[a] = y[a] + h * k3[a];
  ou_flow_rhs(f.end, tmp, k4);
  for (std::size_t a = 0; a < d; ++a) y[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
}

/// Central-difference estimate of d/dt grad ln q_t(y_t) at (t, y).
Vec score_time_derivative(const FlowStep& fwd, const FlowStep& bwd, std::span<const double> y) {
  const double tau = fwd.h;
  Vec forward(y.begin(), y.end());
  Vec backward(y.begin(), y.end());
  ou_flow_rk4(fwd, forward);
  ou_flow_rk4(bwd, backward);
  const Vec gp = fwd.end.score(forward);
  const Vec gm = bwd.end.score(backward);
  Vec out(y.size());
  for (std::size_t a = 0; a < y.size(); ++a) out[a] = (gp[a] - gm[a]) / (2.0 * tau);
  return out;
}

std::vector<double> sorted_grid(std::span<const double> grid) {
  std::vector<double> g(grid.begin(), grid.end());
  std::sort(g.begin(), g.end());
  return g;
}

/// Heun steps of dx/dt = f(t, x) from t0 to t1 across every particle.
template <class Field>
void heun_advance(std::vector<Vec>& xs, double t0, double t1, double max_step, Field&& field_at) {
  if (t1 <= t0) return;
  const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / max_step - 1e-9));
  const double h = (t1 - t0) / static_cast<double>(n);
  const std::size_t d = xs.empty() ? 0 : xs.front().size();
  Vec k1(d), k2(d), tmp(d);
  for (std::size_t k = 0; k < n; ++k) {
    const double ta = t0 + h * static_cast<double>(k);
    const double tb = (k + 1 == n) ? t1 : t0 + h * static_cast<double>(k + 1);
    const auto fa = field_at(ta);
    const auto fb = field_at(tb);
    for (auto& x : xs) {
      fa(x, k1);
      for (std::size_t a = 0; a < d; ++a) tmp[a] = x[a] + h * k1[a];
      fb(tmp, k2);
      for (std::size_t a = 0; a < d; ++a) x[a] += 0.5 * h * (k1[a] + k2[a]);
    }
  }
}

}  // namespace

ScorePerturbationReport score_perturbation_diagnostic(const GaussianMixture& mixture,
                                                      std::span<const double> t_grid,
                                                      const ScorePerturbationOptions& options) {
  const auto grid = sorted_grid(t_grid);
  if (grid.empty()) throw std::invalid_argument("score_perturbation_diagnostic: empty grid");
  if (!(grid.front() > 0.0)) throw std::invalid_argument("score_perturbation_diagnostic: times must be > 0");

  ScorePerturbationReport report;
  if (options.lipschitz > 0.0) {
    report.lipschitz_L = options.lipschitz;
  } else {
    auto sgrid = default_smoothness_grid();
    sgrid.insert(sgrid.end(), grid.begin(), grid.end());
    report.lipschitz_L = smoothness(mixture, sgrid).lipschitz_L;
  }
  const double L = report.lipschitz_L;
  const double d = static_cast<double>(mixture.dimension());

  std::vector<Vec> ys;
  ys.reserve(options.particles);
  for (std::size_t i = 0; i < options.particles; ++i) {
    RngStream rng(options.seed, {i, Phase::diagnostic, 0});
    ys.push_back(mixture.sample(rng));
  }

  double t = 0.0;
  for (double target : grid) {
    const auto n = static_cast<std::size_t>(std::ceil((target - t) / options.ode_step - 1e-9));
    if (n > 0) {
      const double h = (target - t) / static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) {
        const FlowStep step(mixture, t + h * static_cast<double>(k), h);
        for (auto& y : ys) ou_flow_rk4(step, y);
      }
    }
    t = target;

    const double tau = options.relative_step * target;
    const FlowStep fwd(mixture, target, tau), bwd(mixture, target, -tau);
    const FlowStep fwd_half(mixture, target, 0.5 * tau), bwd_half(mixture, target, -0.5 * tau);
    double acc = 0.0, acc_half = 0.0;
    for (const auto& y : ys) {
      acc += squared_norm(score_time_derivative(fwd, bwd, y));
      acc_half += squared_norm(score_time_derivative(fwd_half, bwd_half, y));
    }
    ScorePerturbationRecord rec;
    rec.t = target;
    rec.mean_sq = acc / static_cast<double>(ys.size());
    rec.mean_sq_half_step = acc_half / static_cast<double>(ys.size());
    rec.bound = L * L * d * std::max(L, 1.0 / target);
    rec.ratio = rec.mean_sq / rec.bound;
    report.c_emp = std::max(report.c_emp, rec.ratio);
    const double scale = std::max(rec.mean_sq, 1e-300);
    if (rec.mean_sq > 1e-12) {
      report.fd_relative_change =
          std::max(report.fd_relative_change, std::abs(rec.mean_sq - rec.mean_sq_half_step) / scale);
    }
    report.records.push_back(rec);
  }
  return report;
}

ReparamReport reparam_check(const ScoreOracle& oracle, std::span<const double> t_grid,
                            const ReparamOptions& options) {
  auto grid = sorted_grid(t_grid);
  if (grid.empty()) throw std::invalid_argument("reparam_check: empty grid");
  if (grid.front() < 0.0) throw std::invalid_argument("reparam_check: times must be >= 0");
  if (grid.back() > oracle.horizon() + 1e-12) {
    throw std::invalid_argument("reparam_check: oracle horizon does not cover the grid");
  }
  const GaussianMixture& p0 = oracle.base();
  const double horizon = oracle.horizon();

  std::vector<Vec> xs;
  for (std::size_t i = 0; i < options.particles; ++i) {
    RngStream rng(options.seed, {i, Phase::diagnostic, 1});
    xs.push_back(p0.sample(rng));
  }
  std::vector<Vec> ys = xs;

  auto heat_field = [&](double s) {
    GaussianMixture ps = heat_marginal(p0, s);
    return [ps = std::move(ps)](std::span<const double> x, std::span<double> out) {
      ps.score(x, out);
      for (double& v : out) v *= -0.5;
    };
  };
  auto ou_field = [&](double t) {
    FrozenScore f = oracle.at(horizon - t);
    return [f = std::move(f)](std::span<const double> y, std::span<double> out) {
      f.eval(y, out);
      for (std::size_t a = 0; a < y.size(); ++a) out[a] = -y[a] - out[a];
    };
  };

  ReparamReport report;
  report.t_grid = grid;
  double t_prev = 0.0, s_prev = 0.0;
  for (double t : grid) {
    const double s = std::expm1(2.0 * t);
    heun_advance(xs, s_prev, s, options.inner_step, heat_field);
    heun_advance(ys, t_prev, t, options.inner_step, ou_field);
    double dev = 0.0;
    const double scale = std::exp(-t);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double sq = 0.0;
      for (std::size_t a = 0; a < xs[i].size(); ++a) {
        const double diff = ys[i][a] - scale * xs[i][a];
        sq += diff * diff;
      }
      dev = std::max(dev, std::sqrt(sq));
    }
    report.deviation.push_back(dev);
    report.max_deviation = std::max(report.max_deviation, dev);
    t_prev = t;
    s_prev = s;
  }
  return report;
}

ForwardConvergenceReport forward_convergence_check(const GaussianMixture& mixture,
                                                   std::span<const double> horizons,
                                                   const ForwardConvergenceOptions& options) {
  if (horizons.size() < 4) throw std::invalid_argument("forward_convergence_check: need at least 4 horizons");
  const std::size_t n = options.particles;
  const std::size_t d = mixture.dimension();
  Ensemble gauss(n, d);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(options.seed, {i, Phase::reference, 0});
    u[i] = rng.uniform();
    fill_gaussian(rng, gauss[i]);
  }
  ForwardConvergenceReport report;
  std::vector<std::pair<double, double>> points;
  bool all_floor = true;
  for (double T : horizons) {
    if (!(T > 0.0)) throw std::invalid_argument("forward_convergence_check: horizons must be > 0");
    const GaussianMixture qT = ou_marginal(mixture, T);
    Ensemble samples(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec x = qT.sample_from(u[i], gauss[i]);
      std::copy(x.begin(), x.end(), samples[i].begin());
    }
    const double w2 = n > 0 ? w2_exact(samples, gauss) : 0.0;
    report.records.push_back({T, w2});
    if (w2 > options.floor) all_floor = false;
    // ln W2 against T: the x-axis is T itself, so regress on e^T.
    points.emplace_back(std::exp(T), std::max(w2, std::numeric_limits<double>::min()));
  }
  report.at_floor = all_floor;
  if (all_floor) {
    report.slope = std::numeric_limits<double>::quiet_NaN();
  } else {
    const SlopeFit fit = slope_regression(points);
    report.slope = fit.slope;
    report.slope_stderr = fit.stderr_;
  }
  return report;
}

MomentComparison underdamped_moment_oracle(double z, double v, double g, double h, double gamma,
                                           std::size_t inner_steps) {
  if (inner_steps == 0) throw std::invalid_argument("underdamped_moment_oracle: inner_steps must be >= 1");
  MomentComparison out;
  out.closed_form = underdamped_moments(z, v, g, h, gamma);
  const double dt = h / static_cast<double>(inner_steps);
  // (z, v)' = A (z, v) + b + noise with A = [[1, dt], [0, 1 - gamma dt]], b = (0, g dt).
  double mz = z, mv = v, czz = 0.0, czv = 0.0, cvv = 0.0;
  const double a22 = 1.0 - gamma * dt;
  const double q = 2.0 * gamma * dt;
  for (std::size_t k = 0; k < inner_steps; ++k) {
    const double nmz = mz + dt * mv;
    const double nmv = a22 * mv + g * dt;
    const double nzz = czz + 2.0 * dt * czv + dt * dt * cvv;
    const double nzv = a22 * (czv + dt * cvv);
    const double nvv = a22 * a22 * cvv + q;
    mz = nmz;
    mv = nmv;
    czz = nzz;
    czv = nzv;
    cvv = nvv;
  }
  out.euler_maruyama = {mz, mv, czz, czv, cvv};
  auto rel = [](double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
  };
  const auto& c = out.closed_form;
  const auto& e = out.euler_maruyama;
  out.max_relative_error = std::max({rel(c.mean_z, e.mean_z), rel(c.mean_v, e.mean_v), rel(c.var_z, e.var_z),
                                     rel(c.cov_zv, e.cov_zv), rel(c.var_v, e.var_v)});
  return out;
}

UnderdampedMoments underdamped_em_sampled(double z, double v, double g, double h, double gamma,
                                          std::size_t inner_steps, std::size_t paths, std::uint64_t seed) {
  const double dt = h / static_cast<double>(inner_steps);
  const double noise = std::sqrt(2.0 * gamma * dt);
  double sz = 0, sv = 0, szz = 0, szv = 0, svv = 0;
  for (std::size_t p = 0; p < paths; ++p) {
    RngStream rng(seed, {p, Phase::diagnostic, 2});
    double zz = z, vv = v;
    for (std::size_t k = 0; k < inner_steps; ++k) {
      const double nz = zz + vv * dt;
      vv = vv + (g - gamma * vv) * dt + noise * rng.normal();
      zz = nz;
    }
    sz += zz;
    sv += vv;
    szz += zz * zz;
    szv += zz * vv;
    svv += vv * vv;
  }
  const double n = static_cast<double>(paths);
  UnderdampedMoments m;
  m.mean_z = sz / n;
  m.mean_v = sv / n;
  m.var_z = szz / n - m.mean_z * m.mean_z;
  m.cov_zv = szv / n - m.mean_z * m.mean_v;
  m.var_v = svv / n - m.mean_v * m.mean_v;
  return m;
}

StationarityReport corrector_stationarity_check(const ScoreOracle& oracle, const StationarityOptions& options) {
  const GaussianMixture target = oracle.marginal(options.reverse_time);
  const std::size_t n = options.particles;
  const std::size_t d = target.dimension();
  Ensemble e(n, d, options.reverse_time);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(options.seed, {i, Phase::reference, 1});
    const Vec x = target.sample(rng);
    std::copy(x.begin(), x.end(), e[i].begin());
  }
  CorrectorConfig cfg;
  cfg.kind = CorrectorKind::overdamped;
  cfg.total_time = options.total_time;
  cfg.step = options.step;
  run_corrector(e, cfg, oracle, options.reverse_time, {options.seed, 0});

  const Vec mean = e.axis_mean();
  const Vec var = e.axis_variance();
  const Vec tmean = target.mean();
  const Vec tvar = target.axis_variance();
  StationarityReport r;
  const double nn = static_cast<double>(n);
  // 5-sigma Monte Carlo band plus an allowance for the O(h) step bias.
  r.mean_tolerance = 5.0 / std::sqrt(nn) + 0.05;
  r.var_tolerance = 5.0 * std::sqrt(2.0 / nn) + 0.05;
  for (std::size_t a = 0; a < d; ++a) {
    if (!std::isfinite(mean[a]) || !std::isfinite(var[a])) {
      r.max_mean_error = r.max_var_ratio_error = std::numeric_limits<double>::infinity();
      break;
    }
    const double sd = std::sqrt(tvar[a]);
    r.max_mean_error = std::max(r.max_mean_error, std::abs(mean[a] - tmean[a]) / sd);
    r.max_var_ratio_error = std::max(r.max_var_ratio_error, std::abs(var[a] / tvar[a] - 1.0));
  }
  r.passed = r.max_mean_error <= r.mean_tolerance && r.max_var_ratio_error <= r.var_tolerance;
  return r;
}

}  // namespace pcflow
