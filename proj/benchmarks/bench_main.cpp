#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "foresight/forecaster.hpp"
#include "foresight/scoring.hpp"
#include "foresight/trainer.hpp"

using namespace foresight;

namespace {

std::vector<LabeledForecast> random_forecasts(std::size_t n) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<LabeledForecast> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char id[24];
    std::snprintf(id, sizeof id, "ex%08zu", i);
    const double p = u(gen);
    out.push_back({id, p, u(gen) < p ? 1 : 0});
  }
  return out;
}

std::vector<std::string> note_blocks(int n) {
  std::vector<std::string> blocks;
  for (int i = 0; i < n; ++i)
    blocks.push_back("Progress note " + std::to_string(i) +
                     ": afebrile overnight, tolerating diet, creatinine stable, plan to continue current regimen "
                     "and reassess in the morning with repeat labs.");
  return blocks;
}

}  // namespace

static void BM_Auroc(benchmark::State& state) {
  const auto xs = random_forecasts(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(auroc(xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

static void BM_Ece(benchmark::State& state) {
  const auto xs = random_forecasts(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ece(xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ece)->Arg(1000)->Arg(100000);

static void BM_TopKLift(benchmark::State& state) {
  const auto xs = random_forecasts(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(top_k_lift(xs));
}
BENCHMARK(BM_TopKLift)->Arg(100000);

static void BM_TruncateContext(benchmark::State& state) {
  const auto blocks = note_blocks(static_cast<int>(state.range(0)));
  ContextBudget budget;
  for (auto _ : state) benchmark::DoNotOptimize(truncate_context(blocks, budget));
}
BENCHMARK(BM_TruncateContext)->Arg(50)->Arg(2000);

static void BM_Featurize(benchmark::State& state) {
  const auto blocks = note_blocks(static_cast<int>(state.range(0)));
  const auto text = truncate_context(blocks, ContextBudget{});
  for (auto _ : state)
    benchmark::DoNotOptimize(featurize(text, "Will the patient develop acute kidney injury in the next 48 hours?"));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_Featurize)->Arg(50)->Arg(500);

static void BM_RolloutGroup(benchmark::State& state) {
  std::vector<double> w(kFeatureDim, 0.1);
  const LogisticPolicy policy(w, -0.5, 0.5);
  TrainingExample example{"e", std::vector<double>(kFeatureDim, 0.3), 1};
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(rollout_group(policy, example, 4, rng));
}
BENCHMARK(BM_RolloutGroup);

static void BM_ExpectedProbability(benchmark::State& state) {
  double mu = -2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(expected_probability(mu, 0.5));
    mu = mu > 2.0 ? -2.0 : mu + 0.01;
  }
}
BENCHMARK(BM_ExpectedProbability);
BENCHMARK_MAIN();
