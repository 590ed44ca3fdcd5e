#include <benchmark/benchmark.h>

#include "tps/bench.hpp"
#include "tps/samplers.hpp"
#include "tps/trace.hpp"

using namespace tps;

namespace {

TargetPtr sk_target(std::size_t dim) {
  Rng rng(7);
  return std::make_shared<const SKTarget>(0.5, random_sk_weights(dim, rng));
}

TargetPtr neural_target(std::size_t dim) {
  Rng rng(8);
  Eigen::MatrixXd w = random_neural_weights(dim, rng);
  return std::make_shared<const NeuralTarget>(w, Eigen::VectorXd::Constant(dim, 5.0), 0.0, 1.0);
}

// Per-step cost of a sampler; arg0 = dimension, arg1 = 0 full / 1 incremental.
template <SamplerTag Tag, TargetPtr (*Make)(std::size_t)>
void BM_Step(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const EvalMode mode = state.range(1) == 0 ? EvalMode::full : EvalMode::incremental;
  Chain chain(Tag, Make(dim), mode);
  Rng rng(11);
  NullSink sink;
  chain.run(1'000, rng, sink);
  constexpr std::size_t kBlock = 1'000;
  for (auto _ : state) chain.run(kBlock, rng, sink);
  state.SetItemsProcessed(state.iterations() * kBlock);
  state.SetLabel(std::string(to_string(mode)));
}

BENCHMARK(BM_Step<SamplerTag::pps, sk_target>)->ArgsProduct({{20, 100}, {0, 1}});
BENCHMARK(BM_Step<SamplerTag::bd, sk_target>)->ArgsProduct({{20, 100}, {0, 1}});
BENCHMARK(BM_Step<SamplerTag::zanella_sqrt, sk_target>)->ArgsProduct({{20, 100}, {0, 1}});
BENCHMARK(BM_Step<SamplerTag::pps, neural_target>)->ArgsProduct({{20, 100}, {0, 1}});
BENCHMARK(BM_Step<SamplerTag::bd, neural_target>)->ArgsProduct({{20, 100}, {0, 1}});

// Whole sweep, serial reference against the OpenMP schedule.
void BM_Sweep(benchmark::State& state) {
  BenchConfig config = BenchConfig::desk(Family::sk);
  config.dim = 10;
  config.grid = {0.25, 0.5};
  config.steps = 30'000;
  config.burn_in = 3'000;
  config.batch_size = 1'000;
  config.reps = 2;
  config.mode = EvalMode::incremental;
  const Schedule schedule = state.range(0) == 0 ? Schedule::serial : Schedule::parallel;
  for (auto _ : state) benchmark::DoNotOptimize(run_benchmark(config, schedule));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(config.run_count()));
  state.SetLabel(schedule == Schedule::serial ? "serial" : "parallel");
}

BENCHMARK(BM_Sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
