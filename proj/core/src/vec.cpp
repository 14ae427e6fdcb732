#include "pcflow/vec.hpp"

#include <cmath>
#include <stdexcept>

namespace pcflow {

Vec axpby(double a, std::span<const double> x, double b, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpby: length mismatch");
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = a * x[i] + b * y[i];
    if (!std::isfinite(out[i]) && std::isfinite(a) && std::isfinite(b) &&
        std::isfinite(x[i]) && std::isfinite(y[i])) {
      throw std::overflow_error("axpby: result overflowed");
    }
  }
  return out;
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double norm(std::span<const double> x) { return std::sqrt(squared_norm(x)); }

double squared_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("squared_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

bool all_finite(std::span<const double> x) noexcept {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace pcflow
