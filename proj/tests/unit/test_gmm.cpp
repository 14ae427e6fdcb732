#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pcflow/gmm.hpp"
#include "pcflow/rng.hpp"

using namespace pcflow;

namespace {

GaussianMixture separated_1d() {
  return GaussianMixture({{0.5, {-3.0}, {0.25}}, {0.5, {3.0}, {0.25}}});
}

GaussianMixture anisotropic_2d() {
  return GaussianMixture({{0.3, {1.0, -0.5}, {0.4, 1.5}}, {0.7, {-1.0, 2.0}, {2.0, 0.3}}});
}

void check_same(const GaussianMixture& a, const GaussianMixture& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(std::abs(a[k].weight - b[k].weight) <= tol);
    for (std::size_t i = 0; i < a.dimension(); ++i) {
      CHECK(std::abs(a[k].mean[i] - b[k].mean[i]) <= tol);
      CHECK(std::abs(a[k].variance[i] - b[k].variance[i]) <= tol);
    }
  }
}

}  // namespace

TEST_SUITE("gmm") {

TEST_CASE("construction validates weights, variances and dimensions") {
  CHECK_THROWS_AS(GaussianMixture({{0.5, {0.0}, {1.0}}}), std::invalid_argument);
  CHECK_THROWS_AS(GaussianMixture({{1.0, {0.0}, {0.0}}}), std::invalid_argument);
  CHECK_THROWS_AS(GaussianMixture({{0.5, {0.0}, {1.0}}, {0.5, {0.0, 1.0}, {1.0, 1.0}}}), std::invalid_argument);
  CHECK_THROWS_AS(GaussianMixture({{1.5, {0.0}, {1.0}}, {-0.5, {0.0}, {1.0}}}), std::invalid_argument);
  CHECK_NOTHROW(GaussianMixture({{1.0 - 1e-13, {0.0}, {1.0}}}));
}

TEST_CASE("ou_marginal at t = 0 is the identity") {
  const auto q = anisotropic_2d();
  check_same(ou_marginal(q, 0.0), q, 0.0);
  CHECK_THROWS_AS(ou_marginal(q, -1e-3), std::invalid_argument);
}

TEST_CASE("standard Gaussian is OU-stationary") {
  const auto g = GaussianMixture::standard_normal(3);
  for (double t : {0.1, 1.0, 7.0}) check_same(ou_marginal(g, t), g, 1e-15);
}

TEST_CASE("N((2,0), 4) at t = ln 2 gives N((1,0), 1.75)") {
  const GaussianMixture q({{1.0, {2.0, 0.0}, {4.0, 4.0}}});
  const auto m = ou_marginal(q, std::numbers::ln2);
  CHECK(m[0].mean[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m[0].mean[1] == 0.0);
  CHECK(m[0].variance[0] == doctest::Approx(1.75).epsilon(1e-14));
}

TEST_CASE("ou_marginal moments against Euler-Maruyama simulation") {
  // dx = -x dt + sqrt(2) dB from N(2, 4) on the first axis up to t = ln 2.
  const int paths = 100000;
  const double h = 1e-3;
  const int steps = static_cast<int>(std::round(std::numbers::ln2 / h));
  const double dt = std::numbers::ln2 / steps;
  double s = 0.0, s2 = 0.0;
  for (int p = 0; p < paths; ++p) {
    RngStream rng(5, {static_cast<std::uint64_t>(p), Phase::diagnostic, 0});
    double x = 2.0 + 2.0 * rng.normal();
    for (int k = 0; k < steps; ++k) x += -x * dt + std::sqrt(2.0 * dt) * rng.normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / paths;
  const double var = s2 / paths - mean * mean;
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
  CHECK(var == doctest::Approx(1.75).epsilon(0.02));
}

TEST_CASE("semigroup property") {
  const auto q = appendix_mixture(3);
  check_same(ou_marginal(ou_marginal(q, 0.3), 0.9), ou_marginal(q, 1.2), 1e-12);
}

TEST_CASE("OU marginals converge to the standard Gaussian") {
  const auto q = appendix_mixture(4);
  double max_norm = 0.0;
  for (const auto& c : q.components()) max_norm = std::max(max_norm, std::sqrt(squared_norm(c.mean)));
  const auto m = ou_marginal(q, 10.0);
  for (const auto& c : m.components()) {
    CHECK(std::sqrt(squared_norm(c.mean)) <= std::exp(-10.0) * max_norm + 1e-12);
    for (double v : c.variance) CHECK(std::abs(v - 1.0) < 1e-8);
  }
}

TEST_CASE("score of the standard Gaussian is -x") {
  const auto g = GaussianMixture::standard_normal(3);
  const Vec x{0.3, -1.2, 4.0};
  const Vec s = g.score(x);
  for (int i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(-x[i]));
}

TEST_CASE("symmetric mixture at the midpoint") {
  const auto q = two_component_mixture(3);
  const Vec x{0.0, 0.7, -0.4};
  const Vec s = q.score(x);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx(-0.7 / 0.5));
  CHECK(s[2] == doctest::Approx(0.4 / 0.5));
}

TEST_CASE("score matches finite differences of log_density at 1e3 points") {
  const auto q = appendix_mixture(3);
  RngStream rng(21, {0, Phase::diagnostic, 0});
  const double step = 1e-6;
  double worst = 0.0;
  for (int p = 0; p < 1000; ++p) {
    Vec x = q.sample(rng);
    for (double& v : x) v += 0.5 * rng.normal();
    const Vec s = q.score(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      Vec xp = x, xm = x;
      xp[i] += step;
      xm[i] -= step;
      const double fd = (q.log_density(xp) - q.log_density(xm)) / (2.0 * step);
      const double scale = std::max(1.0, std::abs(s[i]));
      worst = std::max(worst, std::abs(fd - s[i]) / scale);
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("score stays finite far from every mode") {
  const auto q = separated_1d();
  const Vec s = q.score(Vec{400.0});
  CHECK(std::isfinite(s[0]));
  CHECK(s[0] == doctest::Approx(-(400.0 - 3.0) / 0.25));
}

TEST_CASE("log_density normalizer and degenerate duplication") {
  const auto g = GaussianMixture::standard_normal(4);
  CHECK(g.log_density(Vec(4, 0.0)) == doctest::Approx(-2.0 * std::log(2.0 * std::numbers::pi)));
  const GaussianMixture one({{1.0, {0.5, 1.0}, {2.0, 2.0}}});
  const GaussianMixture two({{0.5, {0.5, 1.0}, {2.0, 2.0}}, {0.5, {0.5, 1.0}, {2.0, 2.0}}});
  for (double a : {-1.0, 0.0, 2.5}) {
    const Vec x{a, 1.0 - a};
    CHECK(one.log_density(x) == doctest::Approx(two.log_density(x)).epsilon(1e-14));
  }
}

TEST_CASE("density integrates to one on [-20, 20]") {
  const auto q = GaussianMixture({{0.2, {-4.0}, {0.3}}, {0.5, {1.0}, {2.0}}, {0.3, {6.0}, {0.05}}});
  const double h = 1e-3;
  double sum = 0.0;
  const int n = static_cast<int>(std::round(40.0 / h));
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    sum += w * std::exp(q.log_density(Vec{-20.0 + h * i}));
  }
  CHECK(std::abs(sum * h - 1.0) < 1e-6);
}

TEST_CASE("sampling from the standard Gaussian reduces to gaussian_vector") {
  const auto g = GaussianMixture::standard_normal(5);
  RngStream a(4, {2, Phase::init, 0});
  RngStream b(4, {2, Phase::init, 0});
  const Vec x = g.sample(a);
  CHECK(x == gaussian_vector(b, 5));
}

TEST_CASE("zero-weight components are never sampled") {
  const GaussianMixture q({{1.0, {0.0}, {1.0}}, {0.0, {100.0}, {1.0}}});
  RngStream rng(9, {});
  for (int i = 0; i < 20000; ++i) REQUIRE(q.sample(rng)[0] < 50.0);
  CHECK(q.pick_component(1.0 - 1e-16) == 0);
}

TEST_CASE("component frequencies of 1e5 appendix samples lie in 3-sigma multinomial bands") {
  const auto q = appendix_mixture(5);
  const int n = 100000;
  std::vector<int> counts(q.size(), 0);
  RngStream rng(12, {0, Phase::data_component, 0});
  for (int i = 0; i < n; ++i) ++counts[q.pick_component(rng.uniform())];
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double w = q[k].weight;
    const double sd = std::sqrt(w * (1.0 - w) / n);
    CHECK(std::abs(counts[k] / static_cast<double>(n) - w) < 3.0 * sd);
  }
}

TEST_CASE("smoothness of Gaussians") {
  const double grid[] = {0.0, 0.5, 2.0};
  const auto g = smoothness(GaussianMixture::standard_normal(3), grid);
  CHECK(g.lipschitz_L == doctest::Approx(1.0));
  CHECK(g.second_moment_m2 * g.second_moment_m2 == doctest::Approx(3.0));

  const GaussianMixture n({{1.0, {1.0, 2.0}, {0.5, 0.5}}});
  const auto s = smoothness(n, grid);
  CHECK(s.second_moment_m2 * s.second_moment_m2 == doctest::Approx(5.0 + 2.0 * 0.5));
  CHECK(s.lipschitz_L == doctest::Approx(2.0));
  CHECK_THROWS_AS(smoothness(n, std::span<const double>{}), std::invalid_argument);
}

TEST_CASE("separated 1-d mixture: L estimate reaches the dense-grid scan") {
  const auto q = separated_1d();
  const double grid[] = {0.0};
  const double L = smoothness(q, grid).lipschitz_L;
  // Oracle: dense scan of |d^2/dx^2 ln q| from the closed-form Hessian.
  double scan = 0.0;
  for (double x = -6.0; x <= 6.0; x += 1e-4) scan = std::max(scan, q.hessian_op_norm(Vec{x}));
  CHECK(L >= 1.0 / 0.25);
  CHECK(L >= 0.9 * scan);
  CHECK(L <= scan * (1.0 + 1e-6));
}

TEST_CASE("Hessian matches finite differences of the score") {
  const auto q = anisotropic_2d();
  const Vec x{0.2, 0.9};
  const auto H = q.hessian(x);
  const double h = 1e-6;
  for (std::size_t j = 0; j < 2; ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Vec sp = q.score(xp), sm = q.score(xm);
    for (std::size_t i = 0; i < 2; ++i) CHECK(H[i * 2 + j] == doctest::Approx((sp[i] - sm[i]) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("E|score|^2 <= L d under every tested marginal") {
  const auto q0 = appendix_mixture(3);
  const auto grid = default_smoothness_grid();
  const double L = smoothness(q0, grid).lipschitz_L;
  for (double t : {0.0, 0.1, 1.0}) {
    const auto q = ou_marginal(q0, t);
    RngStream rng(31, {0, Phase::diagnostic, static_cast<std::uint64_t>(t * 10)});
    const int n = 20000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = squared_norm(q.score(q.sample(rng)));
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double sd = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(mean <= L * 3.0 + 3.0 * sd);
  }
}

TEST_CASE("mixture moments") {
  const auto q = anisotropic_2d();
  const Vec m = q.mean();
  CHECK(m[0] == doctest::Approx(0.3 * 1.0 + 0.7 * -1.0));
  const Vec v = q.axis_variance();
  const double ex2 = 0.3 * (0.4 + 1.0) + 0.7 * (2.0 + 1.0);
  CHECK(v[0] == doctest::Approx(ex2 - m[0] * m[0]));
  CHECK(q.second_moment() == doctest::Approx(0.3 * (1.25 + 1.9) + 0.7 * (5.0 + 2.3)));
}

TEST_CASE("appendix mixture layout") {
  CHECK_THROWS_AS(appendix_mixture(1), std::invalid_argument);
  const auto q = appendix_mixture(5);
  CHECK(q.size() == 5);
  CHECK(q.dimension() == 5);
  double total = 0.0;
  for (const auto& c : q.components()) {
    total += c.weight;
    CHECK(std::hypot(c.mean[0], c.mean[1]) == doctest::Approx(2.5));
  }
  CHECK(total == doctest::Approx(1.0));
}

}
