#include "pcflow/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pcflow/rng.hpp"

namespace pcflow {
namespace {

void require_same_shape(const Ensemble& a, const Ensemble& b, const char* who) {
  if (a.dim() != b.dim()) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  if (a.size() != b.size()) throw std::invalid_argument(std::string(who) + ": size mismatch");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Cell index along one axis, or -1 if outside [lo, hi).
long axis_cell(double x, double lo, double hi, std::size_t bins) {
  if (!(x >= lo) || !(x < hi)) return -1;
  const auto c = static_cast<long>((x - lo) / (hi - lo) * static_cast<double>(bins));
  return std::min<long>(c, static_cast<long>(bins) - 1);
}

/// Normalized histogram with the overflow cell stored last.
std::vector<double> histogram(const Ensemble& e, const GridSpec& g) {
  const std::size_t d = e.dim();
  std::size_t cells = 1;
  for (std::size_t a = 0; a < d; ++a) cells *= g.bins;
  std::vector<double> h(cells + 1, 0.0);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto p = e[i];
    std::size_t idx = 0;
    bool inside = true;
    for (std::size_t a = 0; a < d && inside; ++a) {
      const long c = axis_cell(p[a], g.lo[a], g.hi[a], g.bins);
      if (c < 0) inside = false;
      idx = idx * g.bins + static_cast<std::size_t>(std::max(c, 0L));
    }
    h[inside ? idx : cells] += 1.0;
  }
  if (e.size() > 0) {
    for (double& v : h) v /= static_cast<double>(e.size());
  }
  return h;
}

std::vector<double> analytic_histogram(const GaussianMixture& q, const GridSpec& g) {
  const std::size_t d = q.dimension();
  std::size_t cells = 1;
  for (std::size_t a = 0; a < d; ++a) cells *= g.bins;
  std::vector<double> h(cells + 1, 0.0);
  std::vector<std::vector<double>> axis_mass(d, std::vector<double>(g.bins));
  for (const auto& c : q.components()) {
    if (c.weight <= 0.0) continue;
    for (std::size_t a = 0; a < d; ++a) {
      const double sd = std::sqrt(c.variance[a]);
      const double width = (g.hi[a] - g.lo[a]) / static_cast<double>(g.bins);
      for (std::size_t b = 0; b < g.bins; ++b) {
        const double lo = g.lo[a] + width * static_cast<double>(b);
        axis_mass[a][b] = normal_cdf((lo + width - c.mean[a]) / sd) - normal_cdf((lo - c.mean[a]) / sd);
      }
    }
    for (std::size_t idx = 0; idx < cells; ++idx) {
      double m = c.weight;
      std::size_t rem = idx;
      for (std::size_t a = d; a-- > 0;) {
        m *= axis_mass[a][rem % g.bins];
        rem /= g.bins;
      }
      h[idx] += m;
    }
  }
  double inside = 0.0;
  for (std::size_t idx = 0; idx < cells; ++idx) inside += h[idx];
  h[cells] = std::max(0.0, 1.0 - inside);
  return h;
}

void check_grid(const GridSpec& g, std::size_t d) {
  if (d > 3) throw std::invalid_argument("tv_histogram: joint histograms need d <= 3");
  if (g.lo.size() != d || g.hi.size() != d || g.bins == 0) throw std::invalid_argument("tv_histogram: bad grid");
  for (std::size_t a = 0; a < d; ++a) {
    if (!(g.hi[a] > g.lo[a])) throw std::invalid_argument("tv_histogram: empty grid axis");
  }
}

double half_l1(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return std::clamp(0.5 * s, 0.0, 1.0);
}

}  // namespace

std::vector<std::size_t> optimal_assignment(const Ensemble& a, const Ensemble& b) {
  require_same_shape(a, b, "optimal_assignment");
  const std::size_t n = a.size();
  if (n > kExactAssignmentCap) {
    throw std::invalid_argument("optimal_assignment: n exceeds the exact-mode cap of " +
                                std::to_string(kExactAssignmentCap));
  }
  if (n == 0) return {};
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = squared_distance(a[i], b[j]);
  }
  // Potentials u (rows), v (columns); 1-based with column 0 as the virtual source.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      const double* row = cost.data() + (i0 - 1) * n;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 1; j <= n; ++j) perm[p[j] - 1] = j - 1;
  return perm;
}

double w2_exact(const Ensemble& a, const Ensemble& b) {
  require_same_shape(a, b, "w2_exact");
  if (a.empty()) return 0.0;
  const auto perm = optimal_assignment(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += squared_distance(a[i], b[perm[i]]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

double w2_squared_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("w2_squared_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
  }
  // Merge the breakpoints of the two quantile step functions.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double u = 0.0, s = 0.0;
  while (i < a.size() && j < b.size()) {
    const double next = std::min(static_cast<double>(i + 1) / na, static_cast<double>(j + 1) / nb);
    s += (next - u) * (a[i] - b[j]) * (a[i] - b[j]);
    u = next;
    if (static_cast<double>(i + 1) / na <= u) ++i;
    if (static_cast<double>(j + 1) / nb <= u) ++j;
  }
  return s;
}

double w2_sliced(const Ensemble& a, const Ensemble& b, std::size_t slices, std::uint64_t seed) {
  if (a.dim() != b.dim()) throw std::invalid_argument("w2_sliced: dimension mismatch");
  if (a.empty() || b.empty()) throw std::invalid_argument("w2_sliced: empty ensemble");
  if (slices == 0) throw std::invalid_argument("w2_sliced: need at least one slice");
  const std::size_t d = a.dim();
  std::vector<double> pa(a.size()), pb(b.size());
  double total = 0.0;
  for (std::size_t k = 0; k < slices; ++k) {
    Vec theta(d, 1.0);
    if (d > 1) {
      RngStream rng(seed, {0, Phase::projection, k});
      theta = gaussian_vector(rng, d);
      const double n = norm(theta);
      for (double& t : theta) t /= n;
    }
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] = dot(theta, a[i]);
    for (std::size_t i = 0; i < b.size(); ++i) pb[i] = dot(theta, b[i]);
    total += w2_squared_1d(pa, pb);
  }
  return std::sqrt(static_cast<double>(d) * total / static_cast<double>(slices));
}

double w2_estimate(const Ensemble& a, const Ensemble& b, const W2Options& options) {
  if (options.mode == W2Options::Mode::exact) return w2_exact(a, b);
  return w2_sliced(a, b, options.slices, options.seed);
}

Estimate coupling_w2(const Ensemble& a, const Ensemble& b) {
  require_same_shape(a, b, "coupling_w2");
  const std::size_t n = a.size();
  if (n == 0) return {};
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = squared_distance(a[i], b[i]);
  const double mean = std::accumulate(sq.begin(), sq.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double s : sq) var += (s - mean) * (s - mean);
  var /= static_cast<double>(std::max<std::size_t>(1, n - 1));
  Estimate e;
  e.value = std::sqrt(mean);
  e.stderr_ = e.value > 0.0 ? std::sqrt(var / static_cast<double>(n)) / (2.0 * e.value) : 0.0;
  return e;
}

Estimate girsanov_tv_bound(std::span<const double> kl) {
  if (kl.empty()) return {};
  const double n = static_cast<double>(kl.size());
  const double mean = std::accumulate(kl.begin(), kl.end(), 0.0) / n;
  double var = 0.0;
  for (double k : kl) var += (k - mean) * (k - mean);
  var /= std::max(1.0, n - 1.0);
  Estimate e;
  e.value = std::sqrt(std::max(0.0, mean) / 2.0);
  e.stderr_ = e.value > 0.0 ? std::sqrt(var / n) / (4.0 * e.value) : 0.0;
  return e;
}

GridSpec grid_for(const GaussianMixture& q, std::size_t bins) {
  const std::size_t d = q.dimension();
  GridSpec g;
  g.bins = bins;
  g.lo.assign(d, std::numeric_limits<double>::infinity());
  g.hi.assign(d, -std::numeric_limits<double>::infinity());
  for (const auto& c : q.components()) {
    for (std::size_t a = 0; a < d; ++a) {
      const double sd = std::sqrt(c.variance[a]);
      g.lo[a] = std::min(g.lo[a], c.mean[a] - 6.0 * sd);
      g.hi[a] = std::max(g.hi[a], c.mean[a] + 6.0 * sd);
    }
  }
  return g;
}

double tv_histogram(const Ensemble& a, const Ensemble& b, const GridSpec& grid) {
  if (a.dim() != b.dim()) throw std::invalid_argument("tv_histogram: dimension mismatch");
  check_grid(grid, a.dim());
  if (a.empty() || b.empty()) throw std::invalid_argument("tv_histogram: empty ensemble");
  return half_l1(histogram(a, grid), histogram(b, grid));
}

double tv_histogram(const Ensemble& a, const GaussianMixture& q, const GridSpec& grid) {
  if (a.dim() != q.dimension()) throw std::invalid_argument("tv_histogram: dimension mismatch");
  check_grid(grid, a.dim());
  if (a.empty()) throw std::invalid_argument("tv_histogram: empty ensemble");
  return half_l1(histogram(a, grid), analytic_histogram(q, grid));
}

std::vector<double> axis_tv(const Ensemble& a, const GaussianMixture& q, std::size_t bins) {
  if (a.dim() != q.dimension()) throw std::invalid_argument("axis_tv: dimension mismatch");
  if (a.empty()) throw std::invalid_argument("axis_tv: empty ensemble");
  std::vector<double> out;
  const GridSpec full = grid_for(q, bins);
  for (std::size_t axis = 0; axis < a.dim(); ++axis) {
    Ensemble marginal(a.size(), 1);
    for (std::size_t i = 0; i < a.size(); ++i) marginal[i][0] = a[i][axis];
    std::vector<Component> comps;
    for (const auto& c : q.components()) comps.push_back({c.weight, {c.mean[axis]}, {c.variance[axis]}});
    const GaussianMixture qm(std::move(comps));
    out.push_back(tv_histogram(marginal, qm, GridSpec{{full.lo[axis]}, {full.hi[axis]}, bins}));
  }
  return out;
}

std::vector<double> mode_weights(const Ensemble& ensemble, const GaussianMixture& mixture) {
  if (ensemble.empty()) throw std::invalid_argument("mode_weights: empty ensemble");
  if (ensemble.dim() != mixture.dimension()) throw std::invalid_argument("mode_weights: dimension mismatch");
  std::vector<double> w(mixture.size(), 0.0);
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < mixture.size(); ++k) {
      const double dist = squared_distance(ensemble[i], mixture[k].mean);
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    w[best] += 1.0;
  }
  for (double& v : w) v /= static_cast<double>(ensemble.size());
  return w;
}

SlopeFit slope_regression(std::span<const std::pair<double, double>> points) {
  if (points.size() < 4) throw std::invalid_argument("slope_regression: need at least 4 points");
  std::vector<double> x, y;
  for (const auto& [p, e] : points) {
    if (!(p > 0.0) || !(e > 0.0) || !std::isfinite(p) || !std::isfinite(e)) {
      throw std::invalid_argument("slope_regression: parameters and errors must be positive");
    }
    x.push_back(std::log(p));
    y.push_back(std::log(e));
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("slope_regression: parameters must not all be equal");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    rss += r * r;
  }
  fit.stderr_ = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

}  // namespace pcflow
