#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "rootflow/flow/conditional_flow.hpp"
#include "rootflow/flow/spline.hpp"
#include "rootflow/num/mlp.hpp"
#include "rootflow/num/rng.hpp"

using namespace rootflow;

namespace {

flow::FlowData random_data(std::size_t n, std::size_t cond_dim, std::uint64_t seed) {
  num::RngStream rng(seed);
  flow::FlowData data{num::Vector(n), num::Matrix(n, cond_dim)};
  for (std::size_t i = 0; i < n; ++i) {
    data.x[i] = rng.normal();
    for (std::size_t j = 0; j < cond_dim; ++j) data.cond(i, j) = rng.normal();
  }
  return data;
}

void BM_MlpForward(benchmark::State& state) {
  num::RngStream rng(1);
  const std::size_t in = static_cast<std::size_t>(state.range(0));
  const std::vector<std::size_t> sizes{in, 128, 23};
  const auto mlp = num::make_mlp(sizes, 0.01, 0.0, rng);
  num::Vector x(in);
  for (double& v : x) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(num::mlp_eval(mlp, x));
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(9);

void BM_MlpForwardBackward(benchmark::State& state) {
  num::RngStream rng(2);
  const std::vector<std::size_t> sizes{9, 128, 23};
  const auto mlp = num::make_mlp(sizes, 0.01, 0.1, rng);
  num::Vector x(9), gy(23, 1.0);
  for (double& v : x) v = rng.normal();
  auto grads = mlp;
  for (auto _ : state) {
    const auto out = num::mlp_forward(mlp, x, num::Mode::train, &rng);
    benchmark::DoNotOptimize(num::mlp_backward_accumulate(mlp, out.cache, gy, grads));
  }
}
BENCHMARK(BM_MlpForwardBackward);

void BM_SplineForward(benchmark::State& state) {
  const flow::SplineShape shape{static_cast<std::size_t>(state.range(0)), 3.0};
  num::RngStream rng(3);
  std::vector<double> raw(shape.raw_size());
  for (double& v : raw) v = rng.normal();
  double x = -2.9;
  for (auto _ : state) {
    benchmark::DoNotOptimize(flow::rq_spline_forward(shape, raw, x));
    x = x > 2.9 ? -2.9 : x + 0.01;
  }
}
BENCHMARK(BM_SplineForward)->Arg(8)->Arg(32);

void BM_SplineInverse(benchmark::State& state) {
  const flow::SplineShape shape{8, 3.0};
  num::RngStream rng(4);
  std::vector<double> raw(shape.raw_size());
  for (double& v : raw) v = rng.normal();
  double y = -2.9;
  for (auto _ : state) {
    benchmark::DoNotOptimize(flow::rq_spline_inverse(shape, raw, y));
    y = y > 2.9 ? -2.9 : y + 0.01;
  }
}
BENCHMARK(BM_SplineInverse);

void BM_NllLossAndGrad(benchmark::State& state) {
  const std::size_t cond_dim = static_cast<std::size_t>(state.range(0));
  const auto data = random_data(64, cond_dim, 5);
  num::RngStream rng(6);
  flow::FlowConfig cfg;
  cfg.cond_dim = cond_dim;
  const auto f = flow::make_flow(cfg, rng);
  std::vector<std::size_t> rows(64);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  auto grads = flow::zero_grads(f);
  for (auto _ : state)
    benchmark::DoNotOptimize(flow::nll_loss_and_grad(f, data, rows, num::Mode::train, &rng, grads));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_NllLossAndGrad)->Arg(1)->Arg(9);

void BM_TrainFlow(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto data = random_data(n, 3, 7);
  flow::TrainConfig cfg;
  for (auto _ : state) {
    num::RngStream rng(8);
    benchmark::DoNotOptimize(flow::train_flow(data, cfg, rng));
  }
}
BENCHMARK(BM_TrainFlow)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_InputJacobian(benchmark::State& state) {
  num::RngStream rng(9);
  flow::FlowConfig cfg;
  cfg.cond_dim = 9;
  const auto f = flow::make_flow(cfg, rng);
  num::Vector cond(9, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(flow::input_jacobian(f, 0.5, cond, 1e-4));
}
BENCHMARK(BM_InputJacobian);

}  // namespace
