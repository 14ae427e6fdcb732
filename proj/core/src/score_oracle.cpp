#include "pcflow/score_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pcflow/rng.hpp"

namespace pcflow {
namespace {

constexpr double kTimeSlack = 1e-12;

void add_perturbation(const Perturbation& p, std::span<const double> x, std::span<double> out) {
  switch (p.kind) {
    case Perturbation::Kind::none:
      return;
    case Perturbation::Kind::constant_bias:
      for (std::size_t a = 0; a < out.size(); ++a) out[a] += p.epsilon * p.direction[a];
      return;
    case Perturbation::Kind::sinusoidal: {
      const double amp = p.epsilon * std::sin(p.omega * dot(p.direction, x));
      for (std::size_t a = 0; a < out.size(); ++a) out[a] += amp * p.direction[a];
      return;
    }
    case Perturbation::Kind::sign_flip:
      for (double& v : out) v = -v;
      return;
  }
}

}  // namespace

Perturbation Perturbation::constant_bias(double epsilon, Vec direction) {
  Perturbation p;
  p.kind = Kind::constant_bias;
  p.epsilon = epsilon;
  p.direction = std::move(direction);
  return p;
}

Perturbation Perturbation::sinusoidal(double epsilon, double omega, Vec direction) {
  Perturbation p;
  p.kind = Kind::sinusoidal;
  p.epsilon = epsilon;
  p.omega = omega;
  p.direction = std::move(direction);
  return p;
}

std::string_view to_string(Perturbation::Kind kind) {
  switch (kind) {
    case Perturbation::Kind::none: return "none";
    case Perturbation::Kind::constant_bias: return "constant_bias";
    case Perturbation::Kind::sinusoidal: return "sinusoidal";
    case Perturbation::Kind::sign_flip: return "sign_flip";
  }
  return "none";
}

Perturbation::Kind perturbation_kind_from_string(std::string_view name) {
  if (name == "none") return Perturbation::Kind::none;
  if (name == "constant_bias") return Perturbation::Kind::constant_bias;
  if (name == "sinusoidal") return Perturbation::Kind::sinusoidal;
  if (name == "sign_flip") return Perturbation::Kind::sign_flip;
  throw std::invalid_argument("unknown perturbation kind '" + std::string(name) + "'");
}

Vec resolve_direction(const Perturbation& p, std::size_t d) {
  Vec u = p.direction;
  if (u.empty()) {
    RngStream rng(p.direction_seed, {0, Phase::direction, 0});
    u = gaussian_vector(rng, d);
  }
  if (u.size() != d) throw std::invalid_argument("perturbation direction has wrong dimension");
  const double n = norm(u);
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("perturbation direction must be nonzero");
  for (double& v : u) v /= n;
  return u;
}

FrozenScore::FrozenScore(GaussianMixture marginal, Perturbation perturbation)
    : marginal_(std::move(marginal)), perturbation_(std::move(perturbation)) {}

void FrozenScore::eval(std::span<const double> x, std::span<double> out) const {
  marginal_.score(x, out);
  add_perturbation(perturbation_, x, out);
}

Vec FrozenScore::eval(std::span<const double> x) const {
  Vec out(marginal_.dimension());
  eval(x, out);
  return out;
}

ScoreOracle::ScoreOracle(GaussianMixture base, double horizon, Perturbation perturbation,
                         double base_lipschitz)
    : base_(std::move(base)),
      horizon_(horizon),
      perturbation_(std::move(perturbation)),
      base_lipschitz_(base_lipschitz) {
  if (!(horizon_ >= 0.0) || !std::isfinite(horizon_)) throw std::invalid_argument("ScoreOracle: horizon must be >= 0");
  if (!(perturbation_.epsilon >= 0.0)) throw std::invalid_argument("ScoreOracle: epsilon must be >= 0");
  if (!(perturbation_.omega >= 0.0)) throw std::invalid_argument("ScoreOracle: omega must be >= 0");
  if (perturbation_.kind == Perturbation::Kind::constant_bias ||
      perturbation_.kind == Perturbation::Kind::sinusoidal) {
    perturbation_.direction = resolve_direction(perturbation_, base_.dimension());
  }
}

double ScoreOracle::forward_time(double t) const {
  if (!(t >= -kTimeSlack && t <= horizon_ + kTimeSlack)) {
    throw std::out_of_range("ScoreOracle: reverse time " + std::to_string(t) + " outside [0, " +
                            std::to_string(horizon_) + "]");
  }
  return std::max(0.0, horizon_ - t);
}

GaussianMixture ScoreOracle::marginal(double t) const { return ou_marginal(base_, forward_time(t)); }

FrozenScore ScoreOracle::at(double t) const { return FrozenScore(marginal(t), perturbation_); }

Vec ScoreOracle::eval(double t, std::span<const double> x) const { return at(t).eval(x); }

Vec ScoreOracle::exact(double t, std::span<const double> x) const { return marginal(t).score(x); }

Vec ScoreOracle::perturbation_at(std::span<const double> x) const {
  Vec out(base_.dimension(), 0.0);
  if (perturbation_.kind == Perturbation::Kind::sign_flip) {
    throw std::logic_error("perturbation_at: sign_flip is not additive");
  }
  add_perturbation(perturbation_, x, out);
  return out;
}

double effective_lipschitz(const ScoreOracle& oracle) {
  const double L = oracle.base_lipschitz();
  const auto& p = oracle.perturbation();
  if (p.kind == Perturbation::Kind::sinusoidal) return std::max(L, L + p.epsilon * p.omega);
  return L;
}

}  // namespace pcflow
