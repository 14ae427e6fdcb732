#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pcflow/ensemble.hpp"
#include "pcflow/errors.hpp"
#include "pcflow/vec.hpp"

using namespace pcflow;

TEST_SUITE("vec") {

TEST_CASE("axpby identities and arithmetic") {
  const Vec x{1.0, 1.0}, y{1.0, 0.0};
  CHECK(axpby(1.0, x, 0.0, y) == x);
  CHECK(axpby(0.0, x, 1.0, y) == y);
  CHECK(axpby(2.0, x, -1.0, y) == Vec{1.0, 2.0});
}

TEST_CASE("axpby rejects mismatched lengths") {
  CHECK_THROWS_AS(axpby(1.0, Vec{1.0}, 1.0, Vec{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("axpby raises on overflow from finite input") {
  const double big = std::numeric_limits<double>::max();
  CHECK_THROWS_AS(axpby(2.0, Vec{big}, 0.0, Vec{0.0}), std::overflow_error);
}

TEST_CASE("norms and distances") {
  const Vec a{3.0, 4.0};
  CHECK(squared_norm(a) == 25.0);
  CHECK(norm(a) == 5.0);
  CHECK(dot(a, Vec{1.0, 2.0}) == 11.0);
  CHECK(squared_distance(a, Vec{0.0, 0.0}) == 25.0);
  CHECK(all_finite(a));
  CHECK_FALSE(all_finite(Vec{1.0, std::nan("")}));
}

TEST_CASE("ensemble moments and finiteness") {
  Ensemble e(std::vector<Vec>{{0.0, 1.0}, {2.0, 3.0}}, 0.5);
  CHECK(e.size() == 2);
  CHECK(e.dim() == 2);
  CHECK(e.reverse_time() == 0.5);
  CHECK(e.axis_mean() == Vec{1.0, 2.0});
  CHECK(e.axis_variance() == Vec{1.0, 1.0});
  e.require_finite("ok");
  e[1][0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(e.require_finite("stage"), NumericalError);
  CHECK_THROWS_AS(Ensemble(3, 0), std::invalid_argument);
}

}
