#include <doctest.h>

#include <cmath>
#include <vector>

#include "pcflow/diagnostics.hpp"
#include "pcflow/gmm.hpp"

using namespace pcflow;

TEST_SUITE("diagnostics") {

TEST_CASE("score perturbation vanishes for the standard Gaussian") {
  // grad ln q_t(y) = -y and the flow is y' = 0, so the derivative is zero.
  const std::vector<double> grid{0.05, 0.5, 2.0};
  ScorePerturbationOptions opts;
  opts.particles = 200;
  const auto rep = score_perturbation_diagnostic(GaussianMixture::standard_normal(3), grid, opts);
  REQUIRE(rep.records.size() == 3);
  for (const auto& r : rep.records) CHECK(r.mean_sq <= 1e-6);
  CHECK(rep.c_emp <= 1e-6);
}

TEST_CASE("score perturbation matches the single-Gaussian closed form") {
  // q_0 = N(0, s I): q_t = N(0, v_t I), v_t = e^{-2t} s + 1 - e^{-2t}. Along the flow
  // y_t = sqrt(v_t / s) y_0 and grad ln q_t(y_t) = -y_t / v_t, so
  // d/dt grad = -y_0 d/dt (v_t^{-1/2} s^{-1/2}) = y_0 v_t' / (2 v_t^{3/2} sqrt(s)),
  // with E|.|^2 = d (v_t')^2 / (4 v_t^3).
  const double s = 0.25;
  const std::size_t d = 2;
  const GaussianMixture q({{1.0, Vec(d, 0.0), Vec(d, s)}});
  const std::vector<double> grid{0.1, 1.0};
  ScorePerturbationOptions opts;
  opts.particles = 20000;
  const auto rep = score_perturbation_diagnostic(q, grid, opts);
  for (const auto& r : rep.records) {
    const double e = std::exp(-2.0 * r.t);
    const double v = e * s + 1.0 - e;
    const double dv = -2.0 * e * (s - 1.0);
    const double expected = d * dv * dv / (4.0 * v * v * v);
    CHECK(r.mean_sq == doctest::Approx(expected).epsilon(0.05));
  }
  CHECK(rep.fd_relative_change <= 0.01);
}

TEST_CASE("reparameterization: zero deviation at t = 0 and small on a mixture") {
  const std::vector<double> grid{0.0, 0.5, 1.0};
  const ScoreOracle oracle(appendix_mixture(2), 1.0);
  ReparamOptions opts;
  opts.particles = 20;
  opts.inner_step = 1e-4;
  const auto rep = reparam_check(oracle, grid, opts);
  REQUIRE(rep.deviation.size() == 3);
  CHECK(rep.deviation[0] == 0.0);
  CHECK(rep.max_deviation <= 1e-4);
  const ScoreOracle short_oracle(appendix_mixture(2), 0.5);
  CHECK_THROWS(reparam_check(short_oracle, grid, opts));
}

TEST_CASE("reparameterization fails when the oracle score is wrong") {
  const std::vector<double> grid{0.5};
  Perturbation p;
  p.kind = Perturbation::Kind::sign_flip;
  const ScoreOracle oracle(two_component_mixture(2), 0.5, p);
  ReparamOptions opts;
  opts.particles = 20;
  opts.inner_step = 1e-3;
  CHECK(reparam_check(oracle, grid, opts).max_deviation > 0.1);
}

TEST_CASE("forward convergence of a shifted Gaussian is exactly e^{-T} |mu|") {
  const Vec mu{1.0, -2.0};
  const GaussianMixture q({{1.0, mu, {1.0, 1.0}}});
  const std::vector<double> horizons{0.5, 1.0, 1.5, 2.0};
  ForwardConvergenceOptions opts;
  opts.particles = 64;
  const auto rep = forward_convergence_check(q, horizons, opts);
  REQUIRE(rep.records.size() == 4);
  for (const auto& r : rep.records) CHECK(r.w2 == doctest::Approx(std::exp(-r.horizon) * norm(mu)).epsilon(1e-9));
  CHECK(rep.slope == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK_FALSE(rep.at_floor);
}

TEST_CASE("forward convergence of the standard Gaussian sits at the floor") {
  const std::vector<double> horizons{1.0, 2.0, 3.0, 4.0};
  ForwardConvergenceOptions opts;
  opts.particles = 32;
  const auto rep = forward_convergence_check(GaussianMixture::standard_normal(2), horizons, opts);
  CHECK(rep.at_floor);
  CHECK(std::isnan(rep.slope));
  const std::vector<double> few{1.0, 2.0};
  CHECK_THROWS(forward_convergence_check(GaussianMixture::standard_normal(2), few, opts));
}

TEST_CASE("underdamped moment oracle agrees with the closed form") {
  const auto cmp = underdamped_moment_oracle(0.3, -0.5, 0.7, 0.1, 2.0, 2000);
  CHECK(cmp.max_relative_error <= 0.01);
  CHECK(cmp.euler_maruyama.var_v == doctest::Approx(cmp.closed_form.var_v).epsilon(0.01));
}

TEST_CASE("corrector stationarity passes for exact scores and fails for flipped ones") {
  StationarityOptions opts;
  opts.particles = 2000;
  opts.reverse_time = 1.0;
  opts.total_time = 0.2;
  opts.step = 0.002;
  const ScoreOracle good(appendix_mixture(2), 1.0);
  CHECK(corrector_stationarity_check(good, opts).passed);
  Perturbation p;
  p.kind = Perturbation::Kind::sign_flip;
  const ScoreOracle bad(appendix_mixture(2), 1.0, p);
  CHECK_FALSE(corrector_stationarity_check(bad, opts).passed);
}

}
