#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcflow/vec.hpp"

namespace pcflow {

/// A set of d-dimensional particles stored row-major, tagged with the reverse
/// time of the law they approximate. Particle i owns the RNG streams whose
/// particle index is i.
class Ensemble {
 public:
  Ensemble() = default;
  Ensemble(std::size_t size, std::size_t dim, double reverse_time = 0.0);
  Ensemble(std::vector<Vec> particles, double reverse_time = 0.0);

  std::size_t size() const noexcept { return size_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return size_ == 0; }

  std::span<double> operator[](std::size_t i) noexcept { return {coords_.data() + i * dim_, dim_}; }
  std::span<const double> operator[](std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }

  std::span<const double> coords() const noexcept { return coords_; }
  std::span<double> coords() noexcept { return coords_; }

  double reverse_time() const noexcept { return reverse_time_; }
  void set_reverse_time(double t) noexcept { reverse_time_ = t; }

  /// Per-axis sample mean and (population) variance.
  Vec axis_mean() const;
  Vec axis_variance() const;

  /// Throws NumericalError naming the first non-finite particle.
  void require_finite(const std::string& context) const;

  friend bool operator==(const Ensemble&, const Ensemble&) = default;

 private:
  std::size_t size_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  double reverse_time_ = 0.0;
};

}  // namespace pcflow
