#include "pcflow/gmm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pcflow {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Normalized responsibilities from log terms, in place.
void normalize_log_terms(std::span<double> terms) {
  const double lse = log_sum_exp(terms);
  for (double& v : terms) v = std::exp(v - lse);
}

std::vector<double>& scratch(std::size_t k) {
  thread_local std::vector<double> buf;
  if (buf.size() < k) buf.resize(k);
  return buf;
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<Component> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("GaussianMixture: no components");
  dim_ = components_.front().mean.size();
  if (dim_ == 0) throw std::invalid_argument("GaussianMixture: dimension must be >= 1");

  double total = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    auto& c = components_[i];
    const std::string tag = "GaussianMixture: component " + std::to_string(i);
    if (c.mean.size() != dim_) throw std::invalid_argument(tag + " has mismatched dimension");
    if (c.variance.size() == 1 && dim_ > 1) c.variance.assign(dim_, c.variance.front());
    if (c.variance.size() != dim_) throw std::invalid_argument(tag + " variance has wrong length");
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) throw std::invalid_argument(tag + " has negative weight");
    for (double v : c.variance) {
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(tag + " variance must be > 0");
    }
    for (double m : c.mean) {
      if (!std::isfinite(m)) throw std::invalid_argument(tag + " mean is not finite");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("GaussianMixture: weights must sum to 1 (got " + std::to_string(total) + ")");
  }

  const std::size_t k = components_.size();
  log_weight_.resize(k);
  log_norm_.resize(k);
  inv_var_.resize(k * dim_);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& c = components_[i];
    log_weight_[i] = c.weight > 0.0 ? std::log(c.weight) : kNegInf;
    double ln = 0.0;
    for (std::size_t a = 0; a < dim_; ++a) {
      ln += std::log(2.0 * std::numbers::pi * c.variance[a]);
      inv_var_[i * dim_ + a] = 1.0 / c.variance[a];
    }
    log_norm_[i] = -0.5 * ln;
  }
}

GaussianMixture GaussianMixture::standard_normal(std::size_t d) {
  return GaussianMixture({Component{1.0, Vec(d, 0.0), Vec(d, 1.0)}});
}

void GaussianMixture::component_log_terms(std::span<const double> x, std::span<double> out) const {
  const std::size_t k = components_.size();
  for (std::size_t i = 0; i < k; ++i) {
    if (log_weight_[i] == kNegInf) {
      out[i] = kNegInf;
      continue;
    }
    const auto& mu = components_[i].mean;
    const double* iv = inv_var_.data() + i * dim_;
    double q = 0.0;
    for (std::size_t a = 0; a < dim_; ++a) {
      const double c = x[a] - mu[a];
      q += c * c * iv[a];
    }
    out[i] = log_weight_[i] + log_norm_[i] - 0.5 * q;
  }
}

double GaussianMixture::log_density(std::span<const double> x) const {
  if (x.size() != dim_) throw std::invalid_argument("log_density: dimension mismatch");
  auto& buf = scratch(components_.size());
  std::span<double> terms(buf.data(), components_.size());
  component_log_terms(x, terms);
  return log_sum_exp(terms);
}

Vec GaussianMixture::responsibilities(std::span<const double> x) const {
  if (x.size() != dim_) throw std::invalid_argument("responsibilities: dimension mismatch");
  Vec r(components_.size());
  component_log_terms(x, r);
  normalize_log_terms(r);
  return r;
}

void GaussianMixture::score(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dim_ || out.size() != dim_) throw std::invalid_argument("score: dimension mismatch");
  const std::size_t k = components_.size();
  auto& buf = scratch(k);
  std::span<double> r(buf.data(), k);
  component_log_terms(x, r);
  normalize_log_terms(r);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (r[i] == 0.0) continue;
    const auto& mu = components_[i].mean;
    const double* iv = inv_var_.data() + i * dim_;
    for (std::size_t a = 0; a < dim_; ++a) out[a] += r[i] * (mu[a] - x[a]) * iv[a];
  }
}

Vec GaussianMixture::score(std::span<const double> x) const {
  Vec out(dim_);
  score(x, out);
  return out;
}

std::vector<double> GaussianMixture::hessian(std::span<const double> x) const {
  // sum_i r_i (g_i g_i^T - diag(1/s2_i)) - s s^T with g_i = (mu_i - x)/s2_i.
  const Vec r = responsibilities(x);
  std::vector<double> h(dim_ * dim_, 0.0);
  Vec s(dim_, 0.0);
  Vec g(dim_);
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (r[i] == 0.0) continue;
    const auto& mu = components_[i].mean;
    const double* iv = inv_var_.data() + i * dim_;
    for (std::size_t a = 0; a < dim_; ++a) {
      g[a] = (mu[a] - x[a]) * iv[a];
      s[a] += r[i] * g[a];
    }
    for (std::size_t a = 0; a < dim_; ++a) {
      for (std::size_t b = 0; b < dim_; ++b) h[a * dim_ + b] += r[i] * g[a] * g[b];
      h[a * dim_ + a] -= r[i] * iv[a];
    }
  }
  for (std::size_t a = 0; a < dim_; ++a) {
    for (std::size_t b = 0; b < dim_; ++b) h[a * dim_ + b] -= s[a] * s[b];
  }
  return h;
}

double GaussianMixture::hessian_op_norm(std::span<const double> x) const {
  const auto h = hessian(x);
  if (dim_ == 1) return std::abs(h[0]);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      h.data(), static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

std::size_t GaussianMixture::pick_component(double u) const {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (components_[i].weight <= 0.0) continue;
    last_positive = i;
    acc += components_[i].weight;
    if (u < acc) return i;
  }
  return last_positive;
}

Vec GaussianMixture::sample_from(double u, std::span<const double> xi) const {
  if (xi.size() != dim_) throw std::invalid_argument("sample_from: dimension mismatch");
  const auto& c = components_[pick_component(u)];
  Vec out(dim_);
  for (std::size_t a = 0; a < dim_; ++a) out[a] = c.mean[a] + std::sqrt(c.variance[a]) * xi[a];
  return out;
}

Vec GaussianMixture::sample(RngStream& rng) const {
  const double u = components_.size() > 1 ? rng.uniform() : 0.5;
  const Vec xi = gaussian_vector(rng, dim_);
  return sample_from(u, xi);
}

Vec GaussianMixture::mean() const {
  Vec m(dim_, 0.0);
  for (const auto& c : components_) {
    for (std::size_t a = 0; a < dim_; ++a) m[a] += c.weight * c.mean[a];
  }
  return m;
}

Vec GaussianMixture::axis_variance() const {
  const Vec m = mean();
  Vec v(dim_, 0.0);
  for (const auto& c : components_) {
    for (std::size_t a = 0; a < dim_; ++a) {
      const double d = c.mean[a] - m[a];
      v[a] += c.weight * (c.variance[a] + d * d);
    }
  }
  return v;
}

double GaussianMixture::second_moment() const {
  double m2 = 0.0;
  for (const auto& c : components_) {
    double s = 0.0;
    for (std::size_t a = 0; a < dim_; ++a) s += c.mean[a] * c.mean[a] + c.variance[a];
    m2 += c.weight * s;
  }
  return m2;
}

GaussianMixture ou_marginal(const GaussianMixture& q0, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("ou_marginal: t must be >= 0");
  if (t == 0.0) return q0;
  const double decay = std::exp(-t);
  const double decay2 = std::exp(-2.0 * t);
  const double fill = -std::expm1(-2.0 * t);
  std::vector<Component> out = q0.components();
  for (auto& c : out) {
    for (double& m : c.mean) m *= decay;
    for (double& v : c.variance) v = decay2 * v + fill;
  }
  return GaussianMixture(std::move(out));
}

GaussianMixture heat_marginal(const GaussianMixture& p0, double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("heat_marginal: s must be >= 0");
  std::vector<Component> out = p0.components();
  for (auto& c : out) {
    for (double& v : c.variance) v += s;
  }
  return GaussianMixture(std::move(out));
}

std::vector<double> default_smoothness_grid() {
  std::vector<double> grid{0.0};
  const double lo = std::log(1e-3);
  const double hi = std::log(5.0);
  for (int i = 0; i < 19; ++i) grid.push_back(std::exp(lo + (hi - lo) * i / 18.0));
  return grid;
}

SmoothnessInfo smoothness(const GaussianMixture& q0, std::span<const double> t_grid,
                          const SmoothnessOptions& options) {
  if (t_grid.empty()) throw std::invalid_argument("smoothness: empty time grid");
  SmoothnessInfo info;
  info.second_moment_m2 = std::sqrt(q0.second_moment());
  double lmax = 0.0;
  for (std::size_t gi = 0; gi < t_grid.size(); ++gi) {
    const GaussianMixture qt = ou_marginal(q0, t_grid[gi]);
    const auto& comps = qt.components();
    for (const auto& c : comps) lmax = std::max(lmax, qt.hessian_op_norm(c.mean));
    const std::size_t m = options.points_per_segment;
    Vec x(qt.dimension());
    for (std::size_t a = 0; a < comps.size(); ++a) {
      for (std::size_t b = a + 1; b < comps.size(); ++b) {
        for (std::size_t j = 1; j + 1 < m; ++j) {
          const double u = static_cast<double>(j) / static_cast<double>(m - 1);
          for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1.0 - u) * comps[a].mean[i] + u * comps[b].mean[i];
          lmax = std::max(lmax, qt.hessian_op_norm(x));
        }
      }
    }
    for (std::size_t j = 0; j < options.points_per_time; ++j) {
      RngStream rng(options.seed, {j, Phase::diagnostic, gi});
      lmax = std::max(lmax, qt.hessian_op_norm(qt.sample(rng)));
    }
  }
  info.lipschitz_L = std::max(1.0, lmax);
  return info;
}

GaussianMixture appendix_mixture(std::size_t d) {
  if (d < 2) throw std::invalid_argument("appendix_mixture: dimension must be >= 2");
  const double weights[5] = {0.35, 0.25, 0.2, 0.15, 0.05};
  const double variances[5] = {0.1, 0.15, 0.1, 0.2, 0.1};
  std::vector<Component> comps;
  for (int k = 0; k < 5; ++k) {
    const double angle = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * k / 5.0;
    Vec mean(d, 0.0);
    mean[0] = 2.5 * std::cos(angle);
    mean[1] = 2.5 * std::sin(angle);
    for (std::size_t a = 2; a < d; ++a) mean[a] = 0.6 * std::cos(static_cast<double>(k + a));
    comps.push_back({weights[k], std::move(mean), Vec(d, variances[k])});
  }
  return GaussianMixture(std::move(comps));
}

GaussianMixture two_component_mixture(std::size_t d) {
  Vec left(d, 0.0), right(d, 0.0);
  left[0] = -1.0;
  right[0] = 1.0;
  return GaussianMixture({Component{0.5, left, Vec(d, 0.5)}, Component{0.5, right, Vec(d, 0.5)}});
}

}  // namespace pcflow
