#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pcflow/evaluation.hpp"
#include "pcflow/predictor.hpp"
#include "pcflow/rng.hpp"

using namespace pcflow;

namespace {

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

void check_halving_inequality(const Schedule& s, double h_pred) {
  double elapsed = 0.0;
  for (double h : s.steps) {
    CHECK(h > 0.0);
    CHECK(h <= (h_pred - elapsed) / 2.0 + 1e-15);
    elapsed += h;
  }
}

}  // namespace

TEST_SUITE("predictor") {

TEST_CASE("h = 0 leaves the point unchanged") {
  const ScoreOracle o(appendix_mixture(2), 1.0);
  const Vec x{0.3, -0.7};
  CHECK(predictor_step(x, 0.2, 0.0, o) == x);
}

TEST_CASE("standard Gaussian points are fixed points") {
  const ScoreOracle o(GaussianMixture::standard_normal(3), 2.0);
  const Vec x{0.3, -0.7, 2.0};
  const Vec y = predictor_step(x, 0.5, 0.25, o);
  for (int i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-14));
}

TEST_CASE("zero score field doubles x at h = ln 2") {
  // A huge variance makes the score vanish below double resolution.
  const FrozenScore zero(GaussianMixture({{1.0, {0.0, 0.0}, {1e200, 1e200}}}), {});
  Vec x{1.0, 0.0};
  predictor_step(x, std::numbers::ln2, zero);
  CHECK(x[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(x[1] == 0.0);
}

TEST_CASE("step past the horizon is rejected") {
  const ScoreOracle o(GaussianMixture::standard_normal(1), 1.0);
  CHECK_THROWS_AS(predictor_step(Vec{0.0}, 0.95, 0.1, o), std::out_of_range);
  CHECK_THROWS_AS(predictor_step(Vec{0.0}, 0.1, -0.01, o), std::invalid_argument);
}

TEST_CASE("uniform schedules") {
  const auto s = uniform_schedule(0.0, 0.5, 0.1);
  CHECK(s.steps.size() == 5);
  for (double h : s.steps) CHECK(h == doctest::Approx(0.1));
  CHECK(uniform_schedule(1.0, 0.25, 0.25).steps.size() == 1);
  CHECK_THROWS_AS(uniform_schedule(0.0, 0.5, 0.3), std::invalid_argument);
}

TEST_CASE("geometric schedule: dyadic delta") {
  const auto s = geometric_schedule(0.04, 0.0025);
  REQUIRE(s.steps.size() == 4);
  const double expected[] = {0.02, 0.01, 0.005, 0.0025};
  for (int i = 0; i < 4; ++i) CHECK(s.steps[i] == doctest::Approx(expected[i]).epsilon(1e-14));
  CHECK(sum(s.steps) == doctest::Approx(0.0375).epsilon(1e-14));
  check_halving_inequality(s, 0.04);
}

TEST_CASE("geometric schedule: single step") {
  const auto s = geometric_schedule(0.04, 0.02);
  REQUIRE(s.steps.size() == 1);
  CHECK(s.steps[0] == doctest::Approx(0.02));
}

TEST_CASE("geometric schedule: non-dyadic delta lands on h_pred - delta") {
  const auto s = geometric_schedule(0.04, 0.003, 1.0);
  CHECK(std::abs(sum(s.steps) - 0.037) <= 1e-12);
  CHECK(s.start_time == 1.0);
  CHECK(s.end_time == doctest::Approx(1.037));
  check_halving_inequality(s, 0.04);
  // Every step but the last is at least delta.
  for (std::size_t i = 0; i + 1 < s.steps.size(); ++i) CHECK(s.steps[i] >= 0.003 - 1e-15);
}

TEST_CASE("geometric schedule length is logarithmic in h_pred / delta") {
  for (double delta : {1e-3, 1e-5, 1e-8}) {
    const auto s = geometric_schedule(0.1, delta);
    CHECK(s.steps.size() <= static_cast<std::size_t>(std::ceil(std::log2(0.1 / delta))) + 1);
    check_halving_inequality(s, 0.1);
  }
  CHECK_THROWS_AS(geometric_schedule(0.04, 0.03), std::invalid_argument);
  CHECK_THROWS_AS(geometric_schedule(0.04, 0.0), std::invalid_argument);
}

TEST_CASE("empty schedule is the identity; Gaussian base leaves ensembles unchanged") {
  const ScoreOracle o(GaussianMixture::standard_normal(2), 2.0);
  Ensemble e(std::vector<Vec>{{0.1, 0.2}, {-1.0, 3.0}}, 0.5);
  const Ensemble before = e;
  Schedule empty;
  empty.start_time = empty.end_time = 0.5;
  run_predictor(e, empty, o);
  CHECK(e == before);
  run_predictor(e, uniform_schedule(0.5, 1.0, 0.1), o);
  CHECK(e.reverse_time() == doctest::Approx(1.5));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t a = 0; a < 2; ++a) CHECK(e[i][a] == doctest::Approx(before[i][a]).epsilon(1e-13));
}

TEST_CASE("run_predictor rejects an ensemble at the wrong time") {
  const ScoreOracle o(GaussianMixture::standard_normal(1), 2.0);
  Ensemble e(3, 1, 0.2);
  CHECK_THROWS_AS(run_predictor(e, uniform_schedule(0.0, 0.5, 0.1), o), std::invalid_argument);
}

TEST_CASE("transport of N(3, 1) to the early-stopped marginal") {
  // q_0 samples standardized to the exact q_0 moments; the flow of a single
  // Gaussian is affine per axis, so output moments carry no Monte Carlo error.
  const GaussianMixture base({{1.0, {3.0}, {1.0}}});
  const double T = 5.0, delta = 1e-3, h = 1e-4;
  const ScoreOracle o(base, T);
  const auto q_start = o.marginal(0.0);
  const std::size_t n = 2000;
  Ensemble e(n, 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(1, {i, Phase::reference, 0});
    e[i][0] = rng.normal();
  }
  const double m = e.axis_mean()[0], sd = std::sqrt(e.axis_variance()[0]);
  for (std::size_t i = 0; i < n; ++i) {
    e[i][0] = q_start[0].mean[0] + std::sqrt(q_start[0].variance[0]) * (e[i][0] - m) / sd;
  }
  run_predictor(e, uniform_schedule(0.0, T - delta, h), o);
  const auto target = ou_marginal(base, delta);
  CHECK(e.axis_mean()[0] == doctest::Approx(target[0].mean[0]).epsilon(0.02));
  CHECK(e.axis_variance()[0] == doctest::Approx(target[0].variance[0]).epsilon(0.02));
}

TEST_CASE("one-step error against the RK4 reference is second order") {
  const ScoreOracle o(two_component_mixture(2), 2.0);
  const double t = 1.0;
  std::vector<Vec> points;
  RngStream rng(5, {0, Phase::diagnostic, 0});
  for (int i = 0; i < 16; ++i) points.push_back(o.marginal(t).sample(rng));
  std::vector<double> errors;
  for (double h : {0.1, 0.05, 0.025, 0.0125, 0.00625}) {
    double err = 0.0;
    for (const auto& x : points) {
      const Vec a = predictor_step(x, t, h, o);
      const Vec b = reference_flow(x, t, t + h, o, 100);
      err += squared_distance(a, b);
    }
    errors.push_back(std::sqrt(err));
  }
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    const double factor = errors[i] / errors[i + 1];
    CHECK(factor >= 3.4);
    CHECK(factor <= 4.6);
  }
}

TEST_CASE("epoch W2 error is linear in h_pred") {
  // Single Gaussian: the discrete map is affine per axis, so the pushed law is
  // Gaussian and W2 to the exact marginal has a closed form.
  const GaussianMixture base({{1.0, {2.0, -1.0}, {0.3, 2.0}}});
  const double L = 1.0 / 0.3, T = 2.0;
  const ScoreOracle o(base, T);
  const double t0 = 0.5, epoch = 1.0 / L;
  const auto q0 = o.marginal(t0), q1 = o.marginal(t0 + epoch);
  std::vector<std::pair<double, double>> points;
  for (double h : {0.02, 0.01, 0.005, 0.0025}) {
    const double hh = epoch / std::round(epoch / h);
    const auto s = uniform_schedule(t0, epoch, hh);
    const Vec zero = run_predictor(Vec{0.0, 0.0}, s, o);
    const Vec one = run_predictor(Vec{1.0, 1.0}, s, o);
    double w2sq = 0.0;
    for (int a = 0; a < 2; ++a) {
      const double slope = one[a] - zero[a];
      const double mean = slope * q0[0].mean[a] + zero[a];
      const double sd = std::abs(slope) * std::sqrt(q0[0].variance[a]);
      w2sq += std::pow(mean - q1[0].mean[a], 2) + std::pow(sd - std::sqrt(q1[0].variance[a]), 2);
    }
    points.emplace_back(hh, std::sqrt(w2sq));
  }
  const auto fit = slope_regression(points);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(0.3));
}

}
