#include "pcflow/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pcflow/parallel.hpp"

namespace pcflow {
namespace {

constexpr double kTimeSlack = 1e-12;

void check_step(double t, double h, double horizon) {
  if (!(h >= 0.0) || !std::isfinite(h)) throw std::invalid_argument("predictor_step: h must be >= 0");
  if (t + h > horizon + kTimeSlack) {
    throw std::out_of_range("predictor_step: t + h = " + std::to_string(t + h) + " exceeds T = " +
                            std::to_string(horizon));
  }
}

/// RK4 for dx/dt = x + s_t(x) from t to t+h, with fields frozen at t, t+h/2, t+h.
void rk4_step(std::span<double> x, double h, const FrozenScore& f0, const FrozenScore& fmid,
              const FrozenScore& f1, Vec& k1, Vec& k2, Vec& k3, Vec& k4, Vec& tmp) {
  const std::size_t d = x.size();
  f0.eval(x, k1);
  for (std::size_t a = 0; a < d; ++a) k1[a] += x[a];
  for (std::size_t a = 0; a < d; ++a) tmp[a] = x[a] + 0.5 * h * k1[a];
  fmid.eval(tmp, k2);
  for (std::size_t a = 0; a < d; ++a) k2[a] += tmp[a];
  for (std::size_t a = 0; a < d; ++a) tmp[a] = x[a] + 0.5 * h * k2[a];
  fmid.eval(tmp, k3);
  for (std::size_t a = 0; a < d; ++a) k3[a] += tmp[a];
  for (std::size_t a = 0; a < d; ++a) tmp[a] = x[a] + h * k3[a];
  f1.eval(tmp, k4);
  for (std::size_t a = 0; a < d; ++a) k4[a] += tmp[a];
  for (std::size_t a = 0; a < d; ++a) x[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
}

void check_start(const Ensemble& ensemble, const Schedule& schedule) {
  if (std::abs(ensemble.reverse_time() - schedule.start_time) > 1e-9) {
    throw std::invalid_argument("run_predictor: ensemble at t = " + std::to_string(ensemble.reverse_time()) +
                                " but schedule starts at " + std::to_string(schedule.start_time));
  }
}

}  // namespace

void predictor_step(std::span<double> x, double h, const FrozenScore& score) {
  thread_local Vec s;
  s.resize(x.size());
  score.eval(x, s);
  const double grow = std::exp(h);
  const double drift = std::expm1(h);
  for (std::size_t a = 0; a < x.size(); ++a) x[a] = grow * x[a] + drift * s[a];
}

Vec predictor_step(std::span<const double> x, double t, double h, const ScoreOracle& oracle) {
  check_step(t, h, oracle.horizon());
  Vec out(x.begin(), x.end());
  if (h == 0.0) return out;
  predictor_step(out, h, oracle.at(t));
  return out;
}

Schedule uniform_schedule(double t0, double epoch_length, double h_pred) {
  if (!(h_pred > 0.0) || !(epoch_length >= 0.0)) {
    throw std::invalid_argument("uniform_schedule: need h_pred > 0 and epoch_length >= 0");
  }
  const double ratio = epoch_length / h_pred;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("uniform_schedule: epoch length " + std::to_string(epoch_length) +
                                " is not a multiple of h_pred " + std::to_string(h_pred));
  }
  Schedule s;
  s.kind = Schedule::Kind::uniform;
  s.start_time = t0;
  s.end_time = t0 + epoch_length;
  const auto count = static_cast<std::size_t>(n);
  s.steps.assign(count, count > 0 ? epoch_length / static_cast<double>(count) : 0.0);
  return s;
}

Schedule geometric_schedule(double h_pred, double delta, double t0) {
  if (!(delta > 0.0) || !(h_pred > 0.0) || delta > h_pred / 2.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument("geometric_schedule: need 0 < delta <= h_pred/2");
  }
  Schedule s;
  s.kind = Schedule::Kind::geometric;
  s.start_time = t0;
  s.end_time = t0 + (h_pred - delta);
  // remaining = distance from the current time to t0 + h_pred.
  double remaining = h_pred;
  const double stop_tol = 1e-12 * h_pred;
  while (remaining - delta > stop_tol) {
    const double halving = std::max(remaining / 2.0, delta);
    const double step = std::min(halving, remaining - delta);
    s.steps.push_back(step);
    remaining -= step;
  }
  return s;
}

void run_predictor(Ensemble& ensemble, const Schedule& schedule, const ScoreOracle& oracle,
                   unsigned threads) {
  check_start(ensemble, schedule);
  double t = schedule.start_time;
  for (double h : schedule.steps) {
    check_step(t, h, oracle.horizon());
    const FrozenScore field = oracle.at(t);
    parallel_for(ensemble.size(), threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) predictor_step(ensemble[i], h, field);
    });
    t += h;
  }
  ensemble.set_reverse_time(schedule.end_time);
}

Vec run_predictor(std::span<const double> x, const Schedule& schedule, const ScoreOracle& oracle) {
  Vec out(x.begin(), x.end());
  double t = schedule.start_time;
  for (double h : schedule.steps) {
    check_step(t, h, oracle.horizon());
    predictor_step(out, h, oracle.at(t));
    t += h;
  }
  return out;
}

void run_reference_flow(Ensemble& ensemble, const Schedule& schedule, const ScoreOracle& oracle,
                        double max_substep, unsigned threads) {
  if (!(max_substep > 0.0)) throw std::invalid_argument("run_reference_flow: max_substep must be > 0");
  check_start(ensemble, schedule);
  const std::size_t d = ensemble.dim();
  double t = schedule.start_time;
  for (double h : schedule.steps) {
    check_step(t, h, oracle.horizon());
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(h / max_substep - 1e-9)));
    const double sub = h / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double ts = t + sub * static_cast<double>(k);
      const double te = std::min(t + sub * static_cast<double>(k + 1), oracle.horizon());
      const FrozenScore f0 = oracle.at(ts);
      const FrozenScore fm = oracle.at(0.5 * (ts + te));
      const FrozenScore f1 = oracle.at(te);
      parallel_for(ensemble.size(), threads, [&](std::size_t begin, std::size_t end) {
        Vec k1(d), k2(d), k3(d), k4(d), tmp(d);
        for (std::size_t i = begin; i < end; ++i) rk4_step(ensemble[i], sub, f0, fm, f1, k1, k2, k3, k4, tmp);
      });
    }
    t += h;
  }
  ensemble.set_reverse_time(schedule.end_time);
}

Vec reference_flow(std::span<const double> x, double t0, double t1, const ScoreOracle& oracle,
                   std::size_t substeps) {
  if (substeps == 0) throw std::invalid_argument("reference_flow: substeps must be >= 1");
  check_step(t0, t1 - t0, oracle.horizon());
  const std::size_t d = x.size();
  Vec out(x.begin(), x.end());
  Vec k1(d), k2(d), k3(d), k4(d), tmp(d);
  const double sub = (t1 - t0) / static_cast<double>(substeps);
  for (std::size_t k = 0; k < substeps; ++k) {
    const double ts = t0 + sub * static_cast<double>(k);
    const double te = std::min(ts + sub, oracle.horizon());
    rk4_step(out, sub, oracle.at(ts), oracle.at(0.5 * (ts + te)), oracle.at(te), k1, k2, k3, k4, tmp);
  }
  return out;
}

}  // namespace pcflow
