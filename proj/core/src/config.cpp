#include "pcflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pcflow/errors.hpp"

namespace pcflow {
namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

/// Strict view of one JSON object: rejects unknown keys and reports errors
/// under the dotted path.
class Section {
 public:
  Section(const json& j, std::string path, std::initializer_list<const char*> keys) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!allowed.count(k)) throw ConfigError(key(k), "unknown key");
    }
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const char* k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  const json& raw(const char* k) const { return j_.at(k); }

  double number(const char* k, double fallback) const { return has(k) ? number(k) : fallback; }
  double number(const char* k) const {
    const json& v = j_.at(k);
    if (!v.is_number()) throw ConfigError(key(k), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(key(k), "must be finite");
    return x;
  }
  std::optional<double> opt_number(const char* k) const {
    if (!has(k)) return std::nullopt;
    return number(k);
  }
  std::uint64_t unsigned_int(const char* k) const {
    const json& v = j_.at(k);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) throw ConfigError(key(k), "must be >= 0");
    throw ConfigError(key(k), "expected a nonnegative integer");
  }
  std::uint64_t unsigned_int(const char* k, std::uint64_t fallback) const {
    return has(k) ? unsigned_int(k) : fallback;
  }
  std::optional<std::size_t> opt_count(const char* k) const {
    if (!has(k)) return std::nullopt;
    return static_cast<std::size_t>(unsigned_int(k));
  }
  bool boolean(const char* k, bool fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_boolean()) throw ConfigError(key(k), "expected true or false");
    return j_.at(k).get<bool>();
  }
  std::string string(const char* k, const std::string& fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_string()) throw ConfigError(key(k), "expected a string");
    return j_.at(k).get<std::string>();
  }
  std::vector<double> numbers(const char* k) const {
    const json& v = j_.at(k);
    if (!v.is_array()) throw ConfigError(key(k), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>())) throw ConfigError(key(k), "expected finite numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<double> numbers(const char* k, std::vector<double> fallback) const {
    return has(k) ? numbers(k) : fallback;
  }

 private:
  const json& j_;
  std::string path_;
};

GaussianMixture mixture_from_preset(const std::string& name, std::size_t d) {
  if (name == "standard_normal") return GaussianMixture::standard_normal(d);
  if (name == "appendix") return appendix_mixture(d);
  if (name == "two_component") return two_component_mixture(d);
  throw ConfigError("mixture.preset", "unknown preset '" + name + "'");
}

void parse_mixture(const json& j, AppConfig& cfg) {
  const Section s(j, "mixture", {"preset", "dimension", "components"});
  if (s.has("preset") == s.has("components")) {
    throw ConfigError("mixture", "give exactly one of 'preset' or 'components'");
  }
  if (s.has("preset")) {
    cfg.mixture_spec.preset = s.string("preset", "");
    if (!s.has("dimension")) throw ConfigError("mixture.dimension", "required with a preset");
    cfg.mixture_spec.dimension = static_cast<std::size_t>(s.unsigned_int("dimension"));
    if (cfg.mixture_spec.dimension == 0) throw ConfigError("mixture.dimension", "must be >= 1");
    try {
      cfg.run.mixture = mixture_from_preset(cfg.mixture_spec.preset, cfg.mixture_spec.dimension);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError("mixture.dimension", e.what());
    }
    return;
  }
  if (s.has("dimension")) throw ConfigError("mixture.dimension", "only used with a preset");
  const json& list = s.raw("components");
  if (!list.is_array() || list.empty()) throw ConfigError("mixture.components", "expected a nonempty array");
  std::vector<Component> comps;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = "mixture.components[" + std::to_string(i) + "]";
    const Section c(list[i], path, {"weight", "mean", "variance"});
    if (!c.has("weight") || !c.has("mean") || !c.has("variance")) {
      throw ConfigError(path, "needs weight, mean and variance");
    }
    Component comp;
    comp.weight = c.number("weight");
    comp.mean = c.numbers("mean");
    if (c.raw("variance").is_array()) {
      comp.variance = c.numbers("variance");
    } else {
      comp.variance = Vec(comp.mean.size(), c.number("variance"));
    }
    comps.push_back(std::move(comp));
  }
  try {
    cfg.run.mixture = GaussianMixture(std::move(comps));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("mixture.components", e.what());
  }
}

void parse_oracle(const json& j, AppConfig& cfg) {
  const Section s(j, "oracle", {"kind", "epsilon", "omega", "direction_seed", "direction"});
  Perturbation& p = cfg.run.perturbation;
  try {
    p.kind = perturbation_kind_from_string(s.string("kind", "none"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("oracle.kind", e.what());
  }
  p.epsilon = s.number("epsilon", 0.0);
  p.omega = s.number("omega", 0.0);
  if (p.epsilon < 0.0) throw ConfigError("oracle.epsilon", "must be >= 0");
  if (p.omega < 0.0) throw ConfigError("oracle.omega", "must be >= 0");
  p.direction_seed = s.unsigned_int("direction_seed", 1);
  if (s.has("direction")) {
    p.direction = s.numbers("direction");
    if (p.direction.size() != cfg.run.mixture.dimension()) {
      throw ConfigError("oracle.direction", "length must equal the mixture dimension");
    }
    if (norm(p.direction) == 0.0) throw ConfigError("oracle.direction", "must be nonzero");
  }
}

void parse_predictor(const json& j, AppConfig& cfg) {
  const Section s(j, "predictor", {"epsilon", "lipschitz", "epoch_length", "h_pred", "horizon", "rounds", "delta",
                                   "method", "reference_substep"});
  RunConfig& r = cfg.run;
  r.epsilon = s.number("epsilon", r.epsilon);
  r.lipschitz = s.opt_number("lipschitz");
  r.epoch_length = s.opt_number("epoch_length");
  r.h_pred = s.opt_number("h_pred");
  r.horizon = s.opt_number("horizon");
  r.rounds = s.opt_count("rounds");
  r.delta = s.opt_number("delta");
  try {
    r.predictor_method = predictor_method_from_string(s.string("method", "exponential"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("predictor.method", e.what());
  }
  r.reference_substep = s.number("reference_substep", r.reference_substep);
  if (!(r.reference_substep > 0.0)) throw ConfigError("predictor.reference_substep", "must be positive");
}

void parse_corrector(const json& j, AppConfig& cfg) {
  const Section s(j, "corrector", {"kind", "h_corr", "total_time", "steps", "multiplier", "friction",
                                   "velocity_init_std", "girsanov_substeps"});
  RunConfig& r = cfg.run;
  const std::string kind = s.string("kind", "overdamped");
  if (kind == "overdamped") {
    r.algorithm = Algorithm::dpom;
  } else if (kind == "underdamped") {
    r.algorithm = Algorithm::dpum;
  } else if (kind == "none") {
    r.algorithm = Algorithm::predictor_only;
  } else {
    throw ConfigError("corrector.kind", "expected overdamped, underdamped or none");
  }
  r.h_corr = s.opt_number("h_corr");
  r.corrector_time = s.opt_number("total_time");
  r.corrector_steps = s.opt_count("steps");
  r.corrector_multiplier = s.number("multiplier", r.corrector_multiplier);
  r.friction = s.opt_number("friction");
  r.velocity_init_std = s.number("velocity_init_std", r.velocity_init_std);
  r.girsanov_substeps = static_cast<std::size_t>(s.unsigned_int("girsanov_substeps", 0));
}

void parse_run(const json& j, AppConfig& cfg) {
  const Section s(j, "run", {"ensemble_size", "seed", "checkpoints", "output_dir", "write_ensembles", "threads",
                             "metrics"});
  RunConfig& r = cfg.run;
  r.ensemble_size = static_cast<std::size_t>(s.unsigned_int("ensemble_size", r.ensemble_size));
  r.seed = s.unsigned_int("seed", r.seed);
  r.checkpoints = s.numbers("checkpoints", {});
  cfg.output.output_dir = s.string("output_dir", cfg.output.output_dir);
  if (cfg.output.output_dir.empty()) throw ConfigError("run.output_dir", "must not be empty");
  cfg.output.write_ensembles = s.boolean("write_ensembles", cfg.output.write_ensembles);
  const auto threads = s.unsigned_int("threads", 1);
  if (threads == 0 || threads > 1024) throw ConfigError("run.threads", "must be in [1, 1024]");
  r.threads = static_cast<unsigned>(threads);
  if (s.has("metrics")) {
    const Section m(s.raw("metrics"), "run.metrics", {"enabled", "slices", "reference_size"});
    r.metrics.enabled = m.boolean("enabled", true);
    r.metrics.slices = static_cast<std::size_t>(m.unsigned_int("slices", r.metrics.slices));
    r.metrics.reference_size = static_cast<std::size_t>(m.unsigned_int("reference_size", 0));
    if (r.metrics.slices == 0) throw ConfigError("run.metrics.slices", "must be >= 1");
  }
}

void parse_sweep(const json& j, AppConfig& cfg) {
  const Section s(j, "sweep", {"parameter", "values", "girsanov_substeps"});
  SweepSpec spec;
  if (!s.has("parameter")) throw ConfigError("sweep.parameter", "required");
  spec.parameter = sweep_parameter_from_string(s.string("parameter", ""));
  if (!s.has("values")) throw ConfigError("sweep.values", "required");
  spec.values = s.numbers("values");
  if (spec.values.size() < 4) throw ConfigError("sweep.values", "at least 4 values are required");
  for (double v : spec.values) {
    if (!(v > 0.0)) throw ConfigError("sweep.values", "values must be positive");
  }
  spec.girsanov_substeps = static_cast<std::size_t>(s.unsigned_int("girsanov_substeps", spec.girsanov_substeps));
  cfg.sweep = std::move(spec);
}

void parse_verify(const json& j, AppConfig& cfg) {
  const Section s(j, "verify",
                  {"reparam_times", "reparam_particles", "reparam_inner_step", "reparam_tolerance",
                   "reparam_halving_factor", "perturbation_times", "perturbation_particles",
                   "perturbation_max_constant", "perturbation_fd_tolerance", "forward_horizons", "forward_particles",
                   "forward_slope_lo", "forward_slope_hi", "moment_tolerance", "stationarity_particles"});
  VerifySpec& v = cfg.verify;
  v.reparam_times = s.numbers("reparam_times", v.reparam_times);
  v.reparam_particles = static_cast<std::size_t>(s.unsigned_int("reparam_particles", v.reparam_particles));
  v.reparam_inner_step = s.number("reparam_inner_step", v.reparam_inner_step);
  v.reparam_tolerance = s.number("reparam_tolerance", v.reparam_tolerance);
  v.reparam_halving_factor = s.number("reparam_halving_factor", v.reparam_halving_factor);
  v.perturbation_times = s.numbers("perturbation_times", v.perturbation_times);
  v.perturbation_particles = static_cast<std::size_t>(s.unsigned_int("perturbation_particles", v.perturbation_particles));
  v.perturbation_max_constant = s.number("perturbation_max_constant", v.perturbation_max_constant);
  v.perturbation_fd_tolerance = s.number("perturbation_fd_tolerance", v.perturbation_fd_tolerance);
  v.forward_horizons = s.numbers("forward_horizons", v.forward_horizons);
  v.forward_particles = static_cast<std::size_t>(s.unsigned_int("forward_particles", v.forward_particles));
  v.forward_slope_lo = s.number("forward_slope_lo", v.forward_slope_lo);
  v.forward_slope_hi = s.number("forward_slope_hi", v.forward_slope_hi);
  v.moment_tolerance = s.number("moment_tolerance", v.moment_tolerance);
  v.stationarity_particles = static_cast<std::size_t>(s.unsigned_int("stationarity_particles", v.stationarity_particles));

  if (!(v.reparam_inner_step > 0.0)) throw ConfigError("verify.reparam_inner_step", "must be positive");
  if (v.reparam_times.empty()) throw ConfigError("verify.reparam_times", "must be nonempty");
  for (double t : v.reparam_times) {
    if (t < 0.0) throw ConfigError("verify.reparam_times", "times must be >= 0");
  }
  for (double t : v.perturbation_times) {
    if (!(t > 0.0)) throw ConfigError("verify.perturbation_times", "times must be > 0");
  }
  if (v.perturbation_times.empty()) throw ConfigError("verify.perturbation_times", "must be nonempty");
  if (v.forward_horizons.size() < 4) throw ConfigError("verify.forward_horizons", "at least 4 horizons are required");
  for (double t : v.forward_horizons) {
    if (!(t > 0.0)) throw ConfigError("verify.forward_horizons", "horizons must be > 0");
  }
  if (v.forward_particles == 0 || v.forward_particles > 4096) {
    throw ConfigError("verify.forward_particles", "must be in [1, 4096]");
  }
}

ordered opt(const std::optional<double>& v) { return v ? ordered(*v) : ordered(nullptr); }
ordered opt(const std::optional<std::size_t>& v) { return v ? ordered(*v) : ordered(nullptr); }

}  // namespace

AppConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  const Section s(root, "", {"mixture", "oracle", "predictor", "corrector", "run", "sweep", "verify"});
  AppConfig cfg;
  if (!s.has("mixture")) throw ConfigError("mixture", "required");
  parse_mixture(s.raw("mixture"), cfg);
  if (s.has("oracle")) parse_oracle(s.raw("oracle"), cfg);
  if (s.has("predictor")) parse_predictor(s.raw("predictor"), cfg);
  if (s.has("corrector")) parse_corrector(s.raw("corrector"), cfg);
  if (s.has("run")) parse_run(s.raw("run"), cfg);
  if (s.has("sweep")) parse_sweep(s.raw("sweep"), cfg);
  if (s.has("verify")) parse_verify(s.raw("verify"), cfg);

  // Re-validate the derived schedule so bad combinations fail at load time.
  const Plan plan = resolve_plan(cfg.run);
  for (double t : cfg.run.checkpoints) {
    if (!(t >= 0.0) || t > plan.final_time() + 1e-9) {
      throw ConfigError("run.checkpoints", "checkpoint outside [0, T - delta]");
    }
  }
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const AppConfig& cfg) {
  const RunConfig& r = cfg.run;
  ordered root;

  ordered mixture;
  if (!cfg.mixture_spec.preset.empty()) {
    mixture["preset"] = cfg.mixture_spec.preset;
    mixture["dimension"] = cfg.mixture_spec.dimension;
  } else {
    ordered comps = ordered::array();
    for (const auto& c : r.mixture.components()) {
      ordered o;
      o["weight"] = c.weight;
      o["mean"] = c.mean;
      o["variance"] = c.variance;
      comps.push_back(std::move(o));
    }
    mixture["components"] = std::move(comps);
  }
  root["mixture"] = std::move(mixture);

  ordered oracle;
  oracle["kind"] = std::string(to_string(r.perturbation.kind));
  oracle["epsilon"] = r.perturbation.epsilon;
  oracle["omega"] = r.perturbation.omega;
  oracle["direction_seed"] = r.perturbation.direction_seed;
  oracle["direction"] = r.perturbation.direction.empty() ? ordered(nullptr) : ordered(r.perturbation.direction);
  root["oracle"] = std::move(oracle);

  ordered pred;
  pred["epsilon"] = r.epsilon;
  pred["lipschitz"] = opt(r.lipschitz);
  pred["epoch_length"] = opt(r.epoch_length);
  pred["h_pred"] = opt(r.h_pred);
  pred["horizon"] = opt(r.horizon);
  pred["rounds"] = opt(r.rounds);
  pred["delta"] = opt(r.delta);
  pred["method"] = std::string(to_string(r.predictor_method));
  pred["reference_substep"] = r.reference_substep;
  root["predictor"] = std::move(pred);

  ordered corr;
  corr["kind"] = r.algorithm == Algorithm::dpom ? "overdamped" : r.algorithm == Algorithm::dpum ? "underdamped" : "none";
  corr["h_corr"] = opt(r.h_corr);
  corr["total_time"] = opt(r.corrector_time);
  corr["steps"] = opt(r.corrector_steps);
  corr["multiplier"] = r.corrector_multiplier;
  corr["friction"] = opt(r.friction);
  corr["velocity_init_std"] = r.velocity_init_std;
  corr["girsanov_substeps"] = r.girsanov_substeps;
  root["corrector"] = std::move(corr);

  ordered run;
  run["ensemble_size"] = r.ensemble_size;
  run["seed"] = r.seed;
  run["checkpoints"] = r.checkpoints;
  run["output_dir"] = cfg.output.output_dir;
  run["write_ensembles"] = cfg.output.write_ensembles;
  run["threads"] = r.threads;
  ordered metrics;
  metrics["enabled"] = r.metrics.enabled;
  metrics["slices"] = r.metrics.slices;
  metrics["reference_size"] = r.metrics.reference_size;
  run["metrics"] = std::move(metrics);
  root["run"] = std::move(run);

  if (cfg.sweep) {
    ordered sw;
    sw["parameter"] = std::string(to_string(cfg.sweep->parameter));
    sw["values"] = cfg.sweep->values;
    sw["girsanov_substeps"] = cfg.sweep->girsanov_substeps;
    root["sweep"] = std::move(sw);
  } else {
    root["sweep"] = nullptr;
  }

  const VerifySpec& v = cfg.verify;
  ordered ver;
  ver["reparam_times"] = v.reparam_times;
  ver["reparam_particles"] = v.reparam_particles;
  ver["reparam_inner_step"] = v.reparam_inner_step;
  ver["reparam_tolerance"] = v.reparam_tolerance;
  ver["reparam_halving_factor"] = v.reparam_halving_factor;
  ver["perturbation_times"] = v.perturbation_times;
  ver["perturbation_particles"] = v.perturbation_particles;
  ver["perturbation_max_constant"] = v.perturbation_max_constant;
  ver["perturbation_fd_tolerance"] = v.perturbation_fd_tolerance;
  ver["forward_horizons"] = v.forward_horizons;
  ver["forward_particles"] = v.forward_particles;
  ver["forward_slope_lo"] = v.forward_slope_lo;
  ver["forward_slope_hi"] = v.forward_slope_hi;
  ver["moment_tolerance"] = v.moment_tolerance;
  ver["stationarity_particles"] = v.stationarity_particles;
  root["verify"] = std::move(ver);

  return root.dump(2) + "\n";
}

std::vector<std::string> preset_names() { return {"appendix-replication", "theory-mode-dpom", "theory-mode-dpum"}; }

AppConfig preset_config(std::string_view name) {
  AppConfig cfg;
  RunConfig& r = cfg.run;
  if (name == "appendix-replication") {
    cfg.mixture_spec = {"appendix", 5};
    r.mixture = appendix_mixture(5);
    r.algorithm = Algorithm::dpum;
    r.epoch_length = 0.01;
    r.h_pred = 0.01;
    r.rounds = 299;
    r.delta = 0.005;
    r.h_corr = 0.001;
    r.corrector_steps = 3;
    r.friction = 0.01;
    r.velocity_init_std = 0.001;
    r.ensemble_size = 500;
    r.seed = 1;
    r.checkpoints = {0.0, 1.0, 2.0, 2.995};
    cfg.output.output_dir = "out/appendix-replication";
    return cfg;
  }
  if (name == "theory-mode-dpom" || name == "theory-mode-dpum") {
    cfg.mixture_spec = {"two_component", 2};
    r.mixture = two_component_mixture(2);
    r.algorithm = name == "theory-mode-dpom" ? Algorithm::dpom : Algorithm::dpum;
    r.epsilon = 0.2;
    r.ensemble_size = 2000;
    r.seed = 1;
    r.checkpoints = {0.0};
    const Plan plan = resolve_plan(r);
    r.checkpoints.push_back(plan.final_time());
    cfg.output.output_dir = std::string("out/") + std::string(name);
    return cfg;
  }
  throw ConfigError("preset", "unknown preset '" + std::string(name) + "'");
}

}  // namespace pcflow
