#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pcflow {

using Vec = std::vector<double>;

/// a*x + b*y. Throws std::invalid_argument on length mismatch and
/// std::overflow_error if finite inputs produce a non-finite entry.
Vec axpby(double a, std::span<const double> x, double b, std::span<const double> y);

double dot(std::span<const double> x, std::span<const double> y);
double squared_norm(std::span<const double> x);
double norm(std::span<const double> x);
double squared_distance(std::span<const double> x, std::span<const double> y);

bool all_finite(std::span<const double> x) noexcept;

}  // namespace pcflow
