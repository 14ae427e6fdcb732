#include "pcflow/report.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace pcflow {
namespace {

using ordered = nlohmann::ordered_json;

ordered number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ordered numbers(const std::vector<double>& v) {
  ordered a = ordered::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

ordered to_json(const CorrectorConfig& c, bool enabled) {
  ordered j;
  if (!enabled) {
    j["kind"] = "none";
    return j;
  }
  j["kind"] = std::string(to_string(c.kind));
  j["total_time"] = c.total_time;
  j["step"] = c.step;
  j["steps"] = c.num_steps();
  if (c.kind == CorrectorKind::underdamped) {
    j["friction"] = c.friction;
    j["velocity_init_std"] = c.velocity_init_std;
  }
  return j;
}

ordered to_json(const Plan& p) {
  ordered j;
  j["algorithm"] = p.algorithm;
  j["dimension"] = p.dimension;
  j["epsilon"] = p.epsilon;
  j["lipschitz"] = p.lipschitz;
  j["second_moment_m2"] = p.second_moment_m2;
  j["epoch_length"] = p.epoch_length;
  j["rounds"] = p.rounds;
  j["horizon"] = p.horizon;
  j["h_pred"] = p.h_pred;
  j["delta"] = p.delta;
  j["stage2_steps"] = numbers(p.stage2_steps);
  j["corrector"] = to_json(p.corrector, p.correctors);
  j["adjustments"] = p.adjustments;
  return j;
}

ordered to_json(const CheckpointRecord& c) {
  ordered j;
  j["requested_time"] = c.requested_time;
  j["reverse_time"] = c.reverse_time;
  j["iteration"] = c.iteration;
  j["w2_sliced"] = number(c.w2);
  j["tv"] = c.tv ? number(*c.tv) : ordered(nullptr);
  j["axis_tv"] = numbers(c.axis_tv);
  j["mean"] = numbers(c.mean);
  j["variance"] = numbers(c.variance);
  j["target_mean"] = numbers(c.target_mean);
  j["target_variance"] = numbers(c.target_variance);
  j["mode_weights"] = numbers(c.mode_weights);
  return j;
}

}  // namespace

std::size_t Plan::steps_per_epoch() const {
  return static_cast<std::size_t>(std::llround(epoch_length / h_pred));
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string to_json_text(const RunReport& r) {
  ordered j;
  j["plan"] = to_json(r.plan);
  j["ensemble_size"] = r.ensemble_size;
  j["seed"] = r.seed;
  j["stage1_end_time"] = r.stage1_end_time;
  j["final_time"] = r.final_time;
  j["girsanov_kl"] = r.girsanov_kl ? number(*r.girsanov_kl) : ordered(nullptr);
  j["girsanov_tv_bound"] = r.girsanov_tv ? number(*r.girsanov_tv) : ordered(nullptr);
  j["metric_note"] = r.metric_note;
  ordered cps = ordered::array();
  for (const auto& c : r.checkpoints) cps.push_back(to_json(c));
  j["checkpoints"] = std::move(cps);
  return j.dump(2) + "\n";
}

std::string to_json_text(const SweepReport& r) {
  ordered j;
  j["parameter"] = r.parameter;
  j["metric"] = r.metric;
  ordered pts = ordered::array();
  for (const auto& p : r.points) {
    ordered q;
    q["parameter"] = p.parameter;
    q["error"] = number(p.error);
    q["stderr"] = number(p.stderr_);
    pts.push_back(std::move(q));
  }
  j["points"] = std::move(pts);
  j["slope"] = number(r.slope);
  j["slope_stderr"] = number(r.slope_stderr);
  j["intercept"] = number(r.intercept);
  return j.dump(2) + "\n";
}

std::string to_csv_text(const SweepReport& r) {
  std::string out = "parameter,error,stderr\n";
  for (const auto& p : r.points) {
    out += format_double(p.parameter) + "," + format_double(p.error) + "," + format_double(p.stderr_) + "\n";
  }
  return out;
}

}  // namespace pcflow
