#include "pcflow/ensemble.hpp"

#include <cmath>
#include <stdexcept>

#include "pcflow/errors.hpp"

namespace pcflow {

Ensemble::Ensemble(std::size_t size, std::size_t dim, double reverse_time)
    : size_(size), dim_(dim), coords_(size * dim, 0.0), reverse_time_(reverse_time) {
  if (dim == 0) throw std::invalid_argument("Ensemble: dimension must be >= 1");
}

Ensemble::Ensemble(std::vector<Vec> particles, double reverse_time)
    : size_(particles.size()), reverse_time_(reverse_time) {
  if (particles.empty()) throw std::invalid_argument("Ensemble: use the sized constructor for empty ensembles");
  dim_ = particles.front().size();
  if (dim_ == 0) throw std::invalid_argument("Ensemble: dimension must be >= 1");
  coords_.reserve(size_ * dim_);
  for (const auto& p : particles) {
    if (p.size() != dim_) throw std::invalid_argument("Ensemble: ragged particles");
    coords_.insert(coords_.end(), p.begin(), p.end());
  }
}

Vec Ensemble::axis_mean() const {
  Vec mean(dim_, 0.0);
  if (size_ == 0) return mean;
  for (std::size_t i = 0; i < size_; ++i) {
    const auto p = (*this)[i];
    for (std::size_t k = 0; k < dim_; ++k) mean[k] += p[k];
  }
  for (double& m : mean) m /= static_cast<double>(size_);
  return mean;
}

Vec Ensemble::axis_variance() const {
  Vec var(dim_, 0.0);
  if (size_ == 0) return var;
  const Vec mean = axis_mean();
  for (std::size_t i = 0; i < size_; ++i) {
    const auto p = (*this)[i];
    for (std::size_t k = 0; k < dim_; ++k) {
      const double c = p[k] - mean[k];
      var[k] += c * c;
    }
  }
  for (double& v : var) v /= static_cast<double>(size_);
  return var;
}

void Ensemble::require_finite(const std::string& context) const {
  for (std::size_t i = 0; i < size_; ++i) {
    for (double v : (*this)[i]) {
      if (!std::isfinite(v)) {
        throw NumericalError("non-finite particle " + std::to_string(i) + " during " + context);
      }
    }
  }
}

}  // namespace pcflow
