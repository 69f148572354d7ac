#include <benchmark/benchmark.h>

#include "rootflow/num/matrix.hpp"
#include "rootflow/num/rng.hpp"
#include "rootflow/perm/hungarian.hpp"
#include "rootflow/perm/sinkhorn.hpp"

using namespace rootflow;

namespace {

num::Matrix random_matrix(std::size_t d, std::uint64_t seed) {
  num::RngStream rng(seed);
  num::Matrix m(d, d);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

void BM_Sinkhorn(benchmark::State& state) {
  const auto logits = random_matrix(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(perm::sinkhorn(logits, 1e-4, 20));
}
BENCHMARK(BM_Sinkhorn)->Arg(4)->Arg(10)->Arg(50);

void BM_GumbelSinkhorn(benchmark::State& state) {
  const auto logits = random_matrix(10, 2);
  num::RngStream rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(perm::sinkhorn(perm::gumbel_perturb(logits, rng), 1e-4, 20));
}
BENCHMARK(BM_GumbelSinkhorn);

void BM_Hungarian(benchmark::State& state) {
  const auto score = random_matrix(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(perm::hungarian(score));
}
BENCHMARK(BM_Hungarian)->Arg(4)->Arg(10)->Arg(50)->Arg(200);

}  // namespace
