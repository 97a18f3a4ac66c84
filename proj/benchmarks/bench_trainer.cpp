#include <benchmark/benchmark.h>

#include "autohyper/metrics.hpp"
#include "autohyper/trainer/train.hpp"

using namespace autohyper;

namespace {

const trainer::Dataset& shapes() {
  static const trainer::Dataset data = trainer::make_training_set(trainer::DatasetSpec{});
  return data;
}

void BM_TrainEpoch(benchmark::State& state) {
  trainer::TrainConfig config;
  config.epochs = 1;
  config.net_seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(trainer::train_epochs(shapes(), config).train_accuracy);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(shapes().size()));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_ProbeFiveEpochs(benchmark::State& state) {
  trainer::TrainConfig config;
  config.epochs = 5;
  config.net_seed = 1;
  const auto result = trainer::train_epochs(shapes(), config);
  std::vector<WeightSet> sets;
  for (const auto& s : result.snapshots) sets.push_back(promote(s));
  for (auto _ : state) benchmark::DoNotOptimize(global_stable_rank(probe_weight_sets(sets)));
}
BENCHMARK(BM_ProbeFiveEpochs)->Unit(benchmark::kMillisecond);

}  // namespace
