#include <doctest.h>

#include <cmath>

#include "pcflow/errors.hpp"
#include "pcflow/sampler.hpp"

using namespace pcflow;

namespace {

RunConfig gaussian_config(std::size_t d, Algorithm algo, std::size_t n) {
  RunConfig cfg;
  cfg.mixture = GaussianMixture::standard_normal(d);
  cfg.algorithm = algo;
  cfg.ensemble_size = n;
  cfg.seed = 3;
  cfg.epsilon = 0.3;
  cfg.metrics.enabled = false;
  return cfg;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("default delta") {
  CHECK(default_delta(0.1, 1.0, 5, 2.0) == doctest::Approx(0.002));
  CHECK(default_delta(1.0, 1.0, 1, 1.0) == doctest::Approx(1.0));
  for (double h : {0.1, 0.037, 0.5}) {
    const double raw = default_delta(0.1, 1.0, 5, 2.0);
    const double rounded = default_delta(0.1, 1.0, 5, 2.0, h);
    CHECK(rounded <= raw);
    CHECK(rounded <= h / 2.0);
    if (raw <= h / 2.0) CHECK(rounded > raw / 2.0);
    const double k = std::log2(h / rounded);
    CHECK(std::abs(k - std::round(k)) < 1e-9);
  }
}

TEST_CASE("standard Gaussian target is preserved by DPOM and DPUM") {
  for (Algorithm algo : {Algorithm::dpom, Algorithm::dpum}) {
    const std::size_t n = 10000;
    const SampleResult r = run_sampler(gaussian_config(2, algo, n));
    const Vec m = r.final.axis_mean(), v = r.final.axis_variance();
    for (int a = 0; a < 2; ++a) {
      CHECK(std::abs(m[a]) <= 4.0 / std::sqrt(static_cast<double>(n)));
      CHECK(std::abs(v[a] - 1.0) <= 3.0 * std::sqrt(2.0 / n));
    }
  }
}

TEST_CASE("d = 1, N(3, 1): output moments match the early-stopped target") {
  RunConfig cfg;
  cfg.mixture = GaussianMixture({{1.0, {3.0}, {1.0}}});
  cfg.epsilon = 0.1;
  cfg.ensemble_size = 4000;
  cfg.seed = 5;
  cfg.metrics.enabled = false;
  const SampleResult r = dpom(cfg);
  const double delta = r.report.plan.delta;
  const double target_mean = 3.0 * std::exp(-delta);
  const double target_var = std::exp(-2.0 * delta) + (1.0 - std::exp(-2.0 * delta));
  CHECK(std::abs(r.final.axis_mean()[0] - target_mean) <= 0.1);
  CHECK(std::abs(r.final.axis_variance()[0] - target_var) <= 0.1);
}

TEST_CASE("empty ensemble yields an empty result with a valid report") {
  RunConfig cfg = gaussian_config(3, Algorithm::dpom, 0);
  cfg.checkpoints = {0.0};
  const SampleResult r = run_sampler(cfg);
  CHECK(r.final.size() == 0);
  CHECK(r.report.checkpoints.empty());
  CHECK(r.report.final_time == doctest::Approx(r.report.plan.final_time()));
  CHECK_FALSE(to_json_text(r.report).empty());
}

TEST_CASE("reverse-time bookkeeping") {
  RunConfig cfg = gaussian_config(2, Algorithm::dpum, 16);
  cfg.mixture = two_component_mixture(2);
  const SampleResult r = run_sampler(cfg);
  const Plan& p = r.report.plan;
  CHECK(std::abs(r.report.stage1_end_time - static_cast<double>(p.rounds) * p.epoch_length) <= 1e-9);
  CHECK(std::abs(r.report.stage1_end_time - (p.horizon - p.h_pred)) <= 1e-9);
  CHECK(std::abs(r.final.reverse_time() - (p.horizon - p.delta)) <= 1e-9);
}

TEST_CASE("identical configuration and seed reproduce bit for bit, across thread counts") {
  RunConfig cfg = gaussian_config(2, Algorithm::dpum, 300);
  cfg.mixture = appendix_mixture(2);
  cfg.lipschitz = 4.0;
  cfg.metrics.enabled = true;
  cfg.checkpoints = {0.0, 0.5};
  const SampleResult a = run_sampler(cfg);
  const SampleResult b = run_sampler(cfg);
  CHECK(a.final == b.final);
  CHECK(to_json_text(a.report) == to_json_text(b.report));
  cfg.threads = 3;
  CHECK(run_sampler(cfg).final == a.final);
  cfg.seed = 4;
  CHECK_FALSE(run_sampler(cfg).final == a.final);
}

TEST_CASE("h_pred is adjusted down to divide the epoch and the change is logged") {
  RunConfig cfg = gaussian_config(1, Algorithm::dpom, 1);
  cfg.lipschitz = 1.0;
  cfg.h_pred = 0.3;
  const Plan p = resolve_plan(cfg);
  CHECK(p.h_pred == doctest::Approx(0.25));
  REQUIRE(p.adjustments.size() == 1);
  CHECK(p.adjustments[0].find("h_pred") != std::string::npos);
}

TEST_CASE("horizon must equal N0 / L + h_pred") {
  RunConfig cfg = gaussian_config(1, Algorithm::dpom, 1);
  cfg.lipschitz = 1.0;
  cfg.h_pred = 0.1;
  cfg.horizon = 3.1;
  CHECK(resolve_plan(cfg).rounds == 3);
  cfg.horizon = 3.05;
  try {
    resolve_plan(cfg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "predictor.horizon");
  }
  cfg.horizon.reset();
  cfg.h_pred = -0.1;
  CHECK_THROWS_AS(resolve_plan(cfg), ConfigError);
}

TEST_CASE("default schedule follows the theory scalings") {
  RunConfig cfg = gaussian_config(4, Algorithm::dpom, 1);
  cfg.epsilon = 0.2;
  const Plan p = resolve_plan(cfg);
  CHECK(p.lipschitz == doctest::Approx(1.0));
  CHECK(p.h_pred <= 0.2 / 2.0);
  CHECK(p.h_pred > 0.2 / 2.0 / 2.0);
  CHECK(p.corrector.total_time == doctest::Approx(0.5));
  CHECK(p.corrector.step <= 0.04 / 4.0 * (1 + 1e-12));
  CHECK(p.horizon >= std::log(4.0 / 0.04));
  cfg.algorithm = Algorithm::dpum;
  const Plan u = resolve_plan(cfg);
  CHECK(u.corrector.friction == doctest::Approx(1.0));
  CHECK(u.corrector.step <= 0.2 / 2.0 * (1 + 1e-12));
}

TEST_CASE("checkpoints snap to epoch boundaries and report iterations") {
  RunConfig cfg;
  cfg.mixture = appendix_mixture(5);
  cfg.algorithm = Algorithm::dpum;
  cfg.lipschitz = 1.0;
  cfg.epoch_length = 0.01;
  cfg.h_pred = 0.01;
  cfg.rounds = 299;
  cfg.delta = 0.005;
  cfg.h_corr = 0.001;
  cfg.corrector_steps = 3;
  cfg.friction = 0.01;
  cfg.velocity_init_std = 0.001;
  cfg.ensemble_size = 50;
  cfg.checkpoints = {0.0, 1.0, 2.0, 2.995};
  const SampleResult r = run_sampler(cfg);
  REQUIRE(r.report.checkpoints.size() == 4);
  const std::size_t iterations[] = {0, 100, 200, 300};
  for (int j = 0; j < 4; ++j) CHECK(r.report.checkpoints[j].iteration == iterations[j]);
  CHECK(r.report.checkpoints[3].reverse_time == doctest::Approx(2.995));
  CHECK(r.snapshots.size() == 4);
  cfg.checkpoints = {3.5};
  CHECK_THROWS_AS(run_sampler(cfg), ConfigError);
}

TEST_CASE("checkpoint moments track the closed-form marginals") {
  RunConfig cfg;
  cfg.mixture = two_component_mixture(2);
  cfg.algorithm = Algorithm::dpum;
  cfg.epsilon = 0.2;
  cfg.ensemble_size = 4000;
  cfg.seed = 11;
  const Plan p = resolve_plan(cfg);
  for (std::size_t k = 0; k <= p.rounds; ++k) cfg.checkpoints.push_back(k * p.epoch_length);
  const SampleResult r = run_sampler(cfg);
  const double n = 4000.0;
  const double slack = 5.0 * (p.h_pred + p.corrector.step);
  for (const auto& c : r.report.checkpoints) {
    for (int a = 0; a < 2; ++a) {
      const double sd = std::sqrt(c.target_variance[a]);
      CHECK(std::abs(c.mean[a] - c.target_mean[a]) <= 3.0 * sd / std::sqrt(n) + slack);
      CHECK(std::abs(c.variance[a] - c.target_variance[a]) <= 3.0 * c.target_variance[a] * std::sqrt(2.0 / n) + slack);
    }
    REQUIRE(c.tv.has_value());
    CHECK(*c.tv <= 1.0);
  }
}

TEST_CASE("predictor-only baseline skips correctors") {
  RunConfig cfg = gaussian_config(2, Algorithm::predictor_only, 100);
  const SampleResult r = run_sampler(cfg);
  CHECK_FALSE(r.report.plan.correctors);
  // With the exact Gaussian score every stage is the identity.
  RunConfig same = cfg;
  same.rounds = 1;
  const SampleResult s = run_sampler(same);
  for (std::size_t i = 0; i < 100; ++i) CHECK(r.final[i][0] == doctest::Approx(s.final[i][0]).epsilon(1e-10));
}

TEST_CASE("report records the per-axis TV note in d > 3") {
  RunConfig cfg = gaussian_config(4, Algorithm::dpom, 200);
  cfg.metrics.enabled = true;
  cfg.checkpoints = {0.0};
  const SampleResult r = run_sampler(cfg);
  REQUIRE(r.report.checkpoints.size() == 1);
  CHECK_FALSE(r.report.checkpoints[0].tv.has_value());
  CHECK(r.report.checkpoints[0].axis_tv.size() == 4);
  CHECK(r.report.metric_note.find("lower bound") != std::string::npos);
}

}
