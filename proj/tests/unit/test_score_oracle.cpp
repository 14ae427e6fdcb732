#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "pcflow/rng.hpp"
#include "pcflow/score_oracle.hpp"

using namespace pcflow;

TEST_SUITE("score_oracle") {

TEST_CASE("exact oracle on the standard Gaussian returns -x at every time") {
  const ScoreOracle o(GaussianMixture::standard_normal(2), 3.0);
  for (double t : {0.0, 1.0, 3.0}) {
    const Vec s = o.eval(t, Vec{0.4, -2.0});
    CHECK(s[0] == doctest::Approx(-0.4));
    CHECK(s[1] == doctest::Approx(2.0));
  }
}

TEST_CASE("reverse time t reads the forward marginal at T - t") {
  const auto q0 = appendix_mixture(2);
  const ScoreOracle o(q0, 2.0);
  const Vec x{0.3, 0.1};
  const Vec a = o.eval(0.5, x);
  const Vec b = ou_marginal(q0, 1.5).score(x);
  CHECK(a == b);
  CHECK(o.eval(2.0, x) == q0.score(x));
}

TEST_CASE("times outside [0, T] are rejected") {
  const ScoreOracle o(GaussianMixture::standard_normal(1), 1.0);
  CHECK_THROWS_AS(o.eval(-0.01, Vec{0.0}), std::out_of_range);
  CHECK_THROWS_AS(o.eval(1.01, Vec{0.0}), std::out_of_range);
}

TEST_CASE("no perturbation matches the mixture score at 1e3 random (t, x)") {
  const auto q0 = appendix_mixture(3);
  const ScoreOracle o(q0, 4.0);
  RngStream rng(2, {0, Phase::diagnostic, 0});
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = 4.0 * rng.uniform();
    const Vec x = gaussian_vector(rng, 3);
    const Vec a = o.eval(t, x);
    const Vec b = ou_marginal(q0, 4.0 - t).score(x);
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(a[k] - b[k]) / std::max(1.0, std::abs(b[k])));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("constant bias adds epsilon along the direction") {
  const ScoreOracle o(GaussianMixture::standard_normal(2), 1.0, Perturbation::constant_bias(0.1, {1.0, 0.0}));
  const Vec x{0.5, 0.25};
  const Vec s = o.eval(0.3, x);
  CHECK(s[0] == doctest::Approx(-0.5 + 0.1));
  CHECK(s[1] == doctest::Approx(-0.25));
}

TEST_CASE("constant bias: Monte Carlo squared L2 error equals epsilon^2") {
  const double eps = 0.1;
  Perturbation p;
  p.kind = Perturbation::Kind::constant_bias;
  p.epsilon = eps;
  p.direction_seed = 4;
  const ScoreOracle o(appendix_mixture(3), 2.0, p);
  for (double t : {0.0, 1.0, 1.9}) {
    const auto q = o.marginal(t);
    RngStream rng(3, {0, Phase::diagnostic, static_cast<std::uint64_t>(10 * t)});
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vec x = q.sample(rng);
      const double e = squared_distance(o.eval(t, x), o.exact(t, x));
      s += e;
      s2 += e * e;
    }
    const double mean = s / n;
    const double sd = std::sqrt(std::max(0.0, s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - eps * eps) <= 3.0 * sd + 1e-15);
  }
}

TEST_CASE("sinusoidal field: L2 norm <= epsilon and Lipschitz <= epsilon * omega") {
  const double eps = 0.3, omega = 2.0;
  const ScoreOracle o(two_component_mixture(3), 1.0, Perturbation::sinusoidal(eps, omega, {1.0, 1.0, 0.0}));
  RngStream rng(8, {0, Phase::diagnostic, 0});
  double sq = 0.0, lip = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const Vec x = gaussian_vector(rng, 3);
    Vec y = x;
    for (double& v : y) v += 0.1 * rng.normal();
    const Vec px = o.perturbation_at(x), py = o.perturbation_at(y);
    sq += squared_norm(px);
    lip = std::max(lip, std::sqrt(squared_distance(px, py)) / std::sqrt(squared_distance(x, y)));
  }
  CHECK(sq / n <= eps * eps);
  CHECK(lip <= eps * omega + 1e-9);
}

TEST_CASE("effective Lipschitz constant") {
  const auto g = GaussianMixture::standard_normal(2);
  CHECK(effective_lipschitz(ScoreOracle(g, 1.0, {}, 1.0)) == 1.0);
  CHECK(effective_lipschitz(ScoreOracle(g, 1.0, Perturbation::constant_bias(0.5, {1.0, 0.0}), 1.0)) == 1.0);
  CHECK(effective_lipschitz(ScoreOracle(g, 1.0, Perturbation::sinusoidal(0.1, 2.0, {1.0, 0.0}), 1.0)) ==
        doctest::Approx(1.2));
}

TEST_CASE("direction from seed is a deterministic unit vector") {
  Perturbation p;
  p.direction_seed = 17;
  const Vec a = resolve_direction(p, 4);
  CHECK(a == resolve_direction(p, 4));
  CHECK(norm(a) == doctest::Approx(1.0));
  p.direction = {0.0, 0.0};
  CHECK_THROWS_AS(resolve_direction(p, 2), std::invalid_argument);
}

TEST_CASE("sign flip negates the exact score") {
  Perturbation p;
  p.kind = Perturbation::Kind::sign_flip;
  const ScoreOracle o(GaussianMixture::standard_normal(2), 1.0, p);
  CHECK(o.eval(0.5, Vec{1.0, -2.0}) == Vec{1.0, -2.0});
  CHECK(perturbation_kind_from_string(to_string(Perturbation::Kind::sign_flip)) == Perturbation::Kind::sign_flip);
  CHECK_THROWS_AS(perturbation_kind_from_string("bogus"), std::invalid_argument);
}

}
