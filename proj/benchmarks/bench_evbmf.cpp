#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "autohyper/evbmf.hpp"
#include "autohyper/rng.hpp"

namespace {

Eigen::MatrixXd noise(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  autohyper::Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void BM_EvbmfEstimated(benchmark::State& state) {
  const auto rows = static_cast<Eigen::Index>(state.range(0));
  const auto m = noise(rows, 4 * rows, 7);
  for (auto _ : state) benchmark::DoNotOptimize(autohyper::evbmf(m).rank);
  state.SetLabel(std::to_string(rows) + "x" + std::to_string(4 * rows));
}
BENCHMARK(BM_EvbmfEstimated)->Arg(16)->Arg(64)->Arg(144);

void BM_EvbmfKnownNoise(benchmark::State& state) {
  const auto m = noise(64, 256, 11);
  for (auto _ : state) benchmark::DoNotOptimize(autohyper::evbmf(m, 1.0).rank);
}
BENCHMARK(BM_EvbmfKnownNoise);

}  // namespace
