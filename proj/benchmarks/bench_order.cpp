#include <benchmark/benchmark.h>

#include "rootflow/eval/metrics.hpp"
#include "rootflow/num/rng.hpp"
#include "rootflow/order/sequential.hpp"
#include "rootflow/scm/synth.hpp"

using namespace rootflow;

namespace {

void BM_Synthesize(benchmark::State& state) {
  scm::SynthConfig cfg;
  cfg.d = static_cast<std::size_t>(state.range(0));
  cfg.n = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(scm::synthesize(cfg));
}
BENCHMARK(BM_Synthesize)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_FindRoot(benchmark::State& state) {
  scm::SynthConfig cfg;
  cfg.d = static_cast<std::size_t>(state.range(0));
  cfg.n = 1000;
  const auto ds = scm::standardize(scm::synthesize(cfg).data);
  order::SequentialConfig sc;
  sc.threads = 1;
  for (auto _ : state) {
    num::RngStream rng(1);
    benchmark::DoNotOptimize(order::find_root(ds, sc, rng));
  }
}
BENCHMARK(BM_FindRoot)->Arg(4)->Unit(benchmark::kMillisecond)->Iterations(1);

void BM_CountBackward(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0));
  num::RngStream rng(2);
  const auto dag = scm::sample_dag(d, 0.5, rng);
  const eval::CausalOrder order(rng.permutation(d));
  for (auto _ : state) benchmark::DoNotOptimize(eval::count_backward(order, dag));
}
BENCHMARK(BM_CountBackward)->Arg(10)->Arg(100);

}  // namespace
