#include <benchmark/benchmark.h>

#include "pcflow/corrector.hpp"
#include "pcflow/evaluation.hpp"
#include "pcflow/gmm.hpp"
#include "pcflow/predictor.hpp"
#include "pcflow/rng.hpp"
#include "pcflow/sampler.hpp"

namespace {

pcflow::Ensemble gaussian_ensemble(std::size_t n, std::size_t d, std::uint64_t seed) {
  pcflow::Ensemble e(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    pcflow::RngStream rng(seed, {i, pcflow::Phase::init, 0});
    pcflow::fill_gaussian(rng, e[i]);
  }
  return e;
}

void BM_MixtureScore(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto q = pcflow::appendix_mixture(d);
  pcflow::Vec x(d, 0.3), out(d);
  for (auto _ : state) {
    q.score(x, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_MixtureScore)->Arg(2)->Arg(5)->Arg(20);

void BM_GaussianVector(benchmark::State& state) {
  pcflow::RngStream rng(7, {0, pcflow::Phase::init, 0});
  const auto d = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pcflow::gaussian_vector(rng, d));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GaussianVector)->Arg(5)->Arg(20);

void BM_PredictorEpoch(benchmark::State& state) {
  const pcflow::ScoreOracle oracle(pcflow::appendix_mixture(5), 2.0);
  const auto schedule = pcflow::uniform_schedule(0.0, 0.1, 0.01);
  const auto start = gaussian_ensemble(static_cast<std::size_t>(state.range(0)), 5, 1);
  for (auto _ : state) {
    pcflow::Ensemble e = start;
    pcflow::run_predictor(e, schedule, oracle);
    benchmark::DoNotOptimize(e.coords().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 10);
}
BENCHMARK(BM_PredictorEpoch)->Arg(1000);

void BM_CorrectorEpoch(benchmark::State& state) {
  const pcflow::ScoreOracle oracle(pcflow::appendix_mixture(5), 2.0);
  pcflow::CorrectorConfig cfg;
  cfg.kind = state.range(0) == 0 ? pcflow::CorrectorKind::overdamped : pcflow::CorrectorKind::underdamped;
  cfg.total_time = 0.1;
  cfg.step = 0.01;
  const auto start = gaussian_ensemble(1000, 5, 2);
  for (auto _ : state) {
    pcflow::Ensemble e = start;
    pcflow::run_corrector(e, cfg, oracle, 1.0, {3, 0});
    benchmark::DoNotOptimize(e.coords().data());
  }
  state.SetItemsProcessed(state.iterations() * 1000 * 10);
}
BENCHMARK(BM_CorrectorEpoch)->Arg(0)->Arg(1);

void BM_W2Exact(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = gaussian_ensemble(n, 2, 4);
  const auto b = gaussian_ensemble(n, 2, 5);
  for (auto _ : state) benchmark::DoNotOptimize(pcflow::w2_exact(a, b));
}
BENCHMARK(BM_W2Exact)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_W2Sliced(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = gaussian_ensemble(n, 5, 4);
  const auto b = gaussian_ensemble(n, 5, 5);
  for (auto _ : state) benchmark::DoNotOptimize(pcflow::w2_sliced(a, b, 64, 9));
}
BENCHMARK(BM_W2Sliced)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_AppendixRun(benchmark::State& state) {
  pcflow::RunConfig cfg;
  cfg.mixture = pcflow::appendix_mixture(5);
  cfg.algorithm = pcflow::Algorithm::dpum;
  cfg.lipschitz = 1.0;
  cfg.epoch_length = 0.01;
  cfg.h_pred = 0.01;
  cfg.rounds = 299;
  cfg.delta = 0.005;
  cfg.h_corr = 0.001;
  cfg.corrector_steps = 3;
  cfg.friction = 0.01;
  cfg.velocity_init_std = 0.001;
  cfg.ensemble_size = 500;
  cfg.metrics.enabled = false;
  for (auto _ : state) benchmark::DoNotOptimize(pcflow::run_sampler(cfg).final.coords().data());
}
BENCHMARK(BM_AppendixRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
