#include "pcflow/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "pcflow/diagnostics.hpp"
#include "pcflow/errors.hpp"

namespace fs = std::filesystem;

namespace pcflow {
namespace {

std::ostream& log_of(const CommandOptions& o) { return o.log ? *o.log : std::cerr; }

AppConfig load_with_overrides(const CommandOptions& o) {
  AppConfig cfg = load_config(o.config_path);
  if (o.out) cfg.output.output_dir = o.out->string();
  if (o.seed) cfg.run.seed = *o.seed;
  if (o.threads) {
    if (*o.threads == 0) throw ConfigError("run.threads", "must be >= 1");
    cfg.run.threads = *o.threads;
  }
  return cfg;
}

fs::path prepare_output(const AppConfig& cfg) {
  const fs::path dir = cfg.output.output_dir;
  fs::create_directories(dir);
  write_file_atomic(dir / "config.json", emit_config(cfg));
  return dir;
}

template <class Body>
int guarded(const CommandOptions& o, const char* name, Body&& body) {
  std::ostream& log = log_of(o);
  try {
    return body();
  } catch (const ConfigError& e) {
    log << name << ": invalid config: " << e.what() << "\n";
    return exit_config_error;
  } catch (const NumericalError& e) {
    log << name << ": numerical abort: " << e.what() << "\n";
    return exit_numerical_abort;
  } catch (const std::overflow_error& e) {
    log << name << ": numerical abort: " << e.what() << "\n";
    return exit_numerical_abort;
  } catch (const fs::filesystem_error& e) {
    log << name << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    log << name << ": error: " << e.what() << "\n";
    return 1;
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string ensemble_csv(const Ensemble& e, const std::vector<std::pair<std::string, std::string>>& meta) {
  std::string out;
  for (const auto& [k, v] : meta) out += "# " + k + "=" + v + "\n";
  for (std::size_t a = 0; a < e.dim(); ++a) {
    out += (a ? ",x" : "x") + std::to_string(a + 1);
  }
  out += "\n";
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto row = e[i];
    for (std::size_t a = 0; a < row.size(); ++a) {
      if (a) out += ",";
      out += format_double(row[a]);
    }
    out += "\n";
  }
  return out;
}

int cmd_sample(const CommandOptions& o) {
  return guarded(o, "sample", [&] {
    const AppConfig cfg = load_with_overrides(o);
    const fs::path dir = prepare_output(cfg);
    const auto start = std::chrono::steady_clock::now();
    const SampleResult result = run_sampler(cfg.run);
    log_of(o) << "sample: " << result.report.plan.algorithm << " finished at t=" << result.report.final_time
              << " in " << seconds_since(start) << " s\n";
    write_file_atomic(dir / "report.json", to_json_text(result.report));
    if (cfg.output.write_ensembles) {
      for (std::size_t j = 0; j < result.snapshots.size(); ++j) {
        const auto& rec = result.report.checkpoints[j];
        char name[32];
        std::snprintf(name, sizeof name, "ensemble_%03zu.csv", j);
        const std::vector<std::pair<std::string, std::string>> meta = {
            {"algorithm", result.report.plan.algorithm},
            {"checkpoint", std::to_string(j)},
            {"requested_time", format_double(rec.requested_time)},
            {"reverse_time", format_double(rec.reverse_time)},
            {"iteration", std::to_string(rec.iteration)},
            {"seed", std::to_string(cfg.run.seed)},
            {"dimension", std::to_string(result.snapshots[j].dim())},
            {"particles", std::to_string(result.snapshots[j].size())},
        };
        write_file_atomic(dir / name, ensemble_csv(result.snapshots[j], meta));
      }
    }
    return static_cast<int>(exit_ok);
  });
}

int cmd_sweep(const CommandOptions& o) {
  return guarded(o, "sweep", [&] {
    const AppConfig cfg = load_with_overrides(o);
    if (!cfg.sweep) throw ConfigError("sweep", "section required for the sweep command");
    const fs::path dir = prepare_output(cfg);
    const auto start = std::chrono::steady_clock::now();
    const SweepReport report = run_sweep(cfg.run, *cfg.sweep);
    log_of(o) << "sweep: " << report.parameter << " slope " << report.slope << " +- " << report.slope_stderr << " in "
              << seconds_since(start) << " s\n";
    write_file_atomic(dir / "sweep.csv", to_csv_text(report));
    write_file_atomic(dir / "slope.json", to_json_text(report));
    return static_cast<int>(exit_ok);
  });
}

std::vector<VerifyCheck> run_verify_suite(const AppConfig& cfg) {
  const VerifySpec& v = cfg.verify;
  const GaussianMixture& q0 = cfg.run.mixture;
  const Perturbation& pert = cfg.run.perturbation;
  std::vector<VerifyCheck> checks;

  {
    const double t_max = *std::max_element(v.reparam_times.begin(), v.reparam_times.end());
    const ScoreOracle oracle(q0, std::max(t_max, 1e-12), pert);
    ReparamOptions opts;
    opts.particles = v.reparam_particles;
    opts.seed = cfg.run.seed;
    opts.inner_step = v.reparam_inner_step;
    const ReparamReport fine = reparam_check(oracle, v.reparam_times, opts);
    opts.inner_step = 2.0 * v.reparam_inner_step;
    const ReparamReport coarse = reparam_check(oracle, v.reparam_times, opts);
    checks.push_back({"reparam_deviation", std::isfinite(fine.max_deviation) && fine.max_deviation <= v.reparam_tolerance,
                      fine.max_deviation, v.reparam_tolerance, "max |y_t - e^{-t} x_{e^{2t}-1}| over particles and times"});
    // Both deviations at round-off level count as converged.
    const double floor = 1e-12;
    const bool at_floor = coarse.max_deviation <= floor && fine.max_deviation <= floor;
    const double factor = fine.max_deviation > 0.0 ? coarse.max_deviation / fine.max_deviation
                                                   : std::numeric_limits<double>::infinity();
    checks.push_back({"reparam_step_halving", at_floor || factor >= v.reparam_halving_factor, factor,
                      v.reparam_halving_factor, "deviation(2 h) / deviation(h)"});
  }
  {
    ScorePerturbationOptions opts;
    opts.particles = v.perturbation_particles;
    opts.seed = cfg.run.seed;
    const auto rep = score_perturbation_diagnostic(q0, v.perturbation_times, opts);
    checks.push_back({"score_perturbation_constant", std::isfinite(rep.c_emp) && rep.c_emp <= v.perturbation_max_constant,
                      rep.c_emp, v.perturbation_max_constant, "max_t E|d/dt grad ln q_t|^2 / (L^2 d max(L, 1/t))"});
    checks.push_back({"score_perturbation_fd_convergence", rep.fd_relative_change <= v.perturbation_fd_tolerance,
                      rep.fd_relative_change, v.perturbation_fd_tolerance, "relative change when the time step is halved"});
  }
  {
    ForwardConvergenceOptions opts;
    opts.particles = v.forward_particles;
    opts.seed = cfg.run.seed;
    const auto rep = forward_convergence_check(q0, v.forward_horizons, opts);
    const bool ok = rep.at_floor || (rep.slope >= v.forward_slope_lo && rep.slope <= v.forward_slope_hi);
    checks.push_back({"forward_convergence_slope", ok, rep.slope, v.forward_slope_hi,
                      rep.at_floor ? "q_T equals the standard Gaussian; every estimate at the floor"
                                   : "slope of ln W2 in T, accepted range [lo, hi]"});
  }
  {
    const double points[3][2] = {{2.0, 0.1}, {0.01, 0.001}, {10.0, 0.01}};
    double worst = 0.0;
    for (const auto& p : points) {
      worst = std::max(worst, underdamped_moment_oracle(0.3, -0.5, 0.7, p[1], p[0]).max_relative_error);
    }
    checks.push_back({"underdamped_kernel_moments", worst <= v.moment_tolerance, worst, v.moment_tolerance,
                      "max relative error of the five moments against the Euler-Maruyama recursion"});
  }
  {
    const ScoreOracle oracle(q0, 1.0, pert);
    StationarityOptions opts;
    opts.particles = v.stationarity_particles;
    opts.seed = cfg.run.seed;
    opts.reverse_time = 1.0;
    const auto rep = corrector_stationarity_check(oracle, opts);
    checks.push_back({"corrector_stationarity_mean", rep.max_mean_error <= rep.mean_tolerance,
                      rep.max_mean_error, rep.mean_tolerance, "max per-axis |mean error| / sd at q_0"});
    checks.push_back({"corrector_stationarity_variance", rep.max_var_ratio_error <= rep.var_tolerance,
                      rep.max_var_ratio_error, rep.var_tolerance, "max per-axis |var / target var - 1| at q_0"});
  }
  return checks;
}

std::string verify_json(const std::vector<VerifyCheck>& checks) {
  nlohmann::ordered_json j;
  bool all = true;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["passed"] = c.passed;
    e["value"] = std::isfinite(c.value) ? nlohmann::ordered_json(c.value) : nlohmann::ordered_json(nullptr);
    e["tolerance"] = c.tolerance;
    e["detail"] = c.detail;
    list.push_back(std::move(e));
    all = all && c.passed;
  }
  j["passed"] = all;
  j["checks"] = std::move(list);
  return j.dump(2) + "\n";
}

int cmd_verify(const CommandOptions& o) {
  return guarded(o, "verify", [&] {
    const AppConfig cfg = load_with_overrides(o);
    const fs::path dir = prepare_output(cfg);
    std::vector<VerifyCheck> checks;
    try {
      checks = run_verify_suite(cfg);
    } catch (const NumericalError& e) {
      checks.push_back({"numerical", false, 0.0, 0.0, e.what()});
    }
    write_file_atomic(dir / "verify.json", verify_json(checks));
    bool all = true;
    for (const auto& c : checks) {
      if (!c.passed) {
        log_of(o) << "verify: FAILED " << c.name << " (value " << c.value << ", tolerance " << c.tolerance << ")\n";
        all = false;
      }
    }
    return static_cast<int>(all ? exit_ok : exit_diagnostic_failure);
  });
}

}  // namespace pcflow
