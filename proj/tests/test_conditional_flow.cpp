#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "helpers.hpp"
#include "rootflow/error.hpp"
#include "rootflow/flow/conditional_flow.hpp"
#include "rootflow/num/finite_diff.hpp"

using namespace rootflow;
using flow::ConditionalFlow;
using flow::FlowData;
using num::Mode;
using num::RngStream;
using num::Vector;
using testing_helpers::random_flow;
using testing_helpers::small_config;

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274;
constexpr double kGaussEntropy = 1.4189385332046727;

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

bool grad_close(double analytic, double fd) {
  if (std::abs(fd) < 1e-3) return std::abs(analytic - fd) <= 1e-7;
  return std::abs(analytic - fd) <= 1e-4 * std::abs(fd);
}

}  // namespace

TEST(ConditionalFlow, FreshFlowIsExactIdentity) {
  RngStream rng(1);
  const auto f = flow::make_flow(small_config(3, 2, 16), rng);
  for (double x : {-2.5, 0.0, 1.7, 5.0}) {
    const auto ev = flow::flow_transform(f, x, Vector{0.3, -1.0, 2.0}, Mode::eval);
    EXPECT_NEAR(ev.u, x, 1e-12);
    EXPECT_NEAR(ev.logdet, 0.0, 1e-12);
  }
}

TEST(ConditionalFlow, ConditionLengthIsChecked) {
  RngStream rng(1);
  const auto f = flow::make_flow(small_config(2), rng);
  EXPECT_THROW(flow::flow_transform(f, 0.0, Vector{1.0}, Mode::eval), DimensionError);
  EXPECT_THROW(flow::input_jacobian(f, 0.0, Vector{1.0, 2.0, 3.0}), DimensionError);
}

TEST(ConditionalFlow, MatchesLayerByLayerComposition) {
  RngStream rng(2);
  const auto f = random_flow(small_config(2, 3), rng);
  const Vector cond{0.4, -0.9};
  double x = 0.8, logdet = 0.0;
  const auto ev = flow::flow_transform(f, x, cond, Mode::eval);
  for (const auto& cond_net : f.conditioners) {
    const auto raw = num::mlp_eval(cond_net, cond);
    const auto v = flow::rq_spline_forward(f.config.spline, raw, x);
    x = v.y;
    logdet += v.log_abs_deriv;
  }
  EXPECT_NEAR(ev.u, x, 1e-13);
  EXPECT_NEAR(ev.logdet, logdet, 1e-13);
  const auto fast = flow::flow_eval(f, 0.8, cond);
  EXPECT_EQ(fast.y, ev.u);
  EXPECT_EQ(fast.log_abs_deriv, ev.logdet);
}

TEST(ConditionalFlow, StrictlyIncreasingOnRandomConfigurations) {
  RngStream rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t cd = rng.below(4);
    const auto f = random_flow(small_config(cd, 1 + rng.below(3)), rng, 1.0);
    Vector cond(cd);
    for (double& c : cond) c = rng.uniform(-2, 2);
    double a = rng.uniform(-4, 4), b = rng.uniform(-4, 4);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    EXPECT_LT(flow::flow_eval(f, a, cond).y, flow::flow_eval(f, b, cond).y);
  }
}

TEST(ConditionalFlow, InverseRoundTrip) {
  RngStream rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto f = random_flow(small_config(2, 1 + rng.below(3)), rng, 0.5);
    const Vector cond{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const double x = rng.uniform(-3.5, 3.5);
    worst = std::max(worst, std::abs(flow::flow_inverse(f, flow::flow_eval(f, x, cond).y, cond) - x));
  }
  EXPECT_LE(worst, 1e-8);
}

// With extreme parameters the round trip is limited by conditioning: an
// output rounding error of one ulp becomes ulp / T'(x) in x.
TEST(ConditionalFlow, InverseRoundTripWithinConditioningBound) {
  RngStream rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto f = random_flow(small_config(2, 1 + rng.below(3)), rng, 1.5);
    const Vector cond{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const double x = rng.uniform(-3.5, 3.5);
    const auto fwd = flow::flow_eval(f, x, cond);
    const double slope = std::exp(fwd.log_abs_deriv);
    const double bound = 1e-8 + 256 * std::numeric_limits<double>::epsilon() * 4.0 / slope;
    EXPECT_LE(std::abs(flow::flow_inverse(f, fwd.y, cond) - x), bound) << "trial " << trial;
  }
}

TEST(ConditionalFlow, LogdetMatchesFiniteDifferenceSlope) {
  RngStream rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = random_flow(small_config(1, 2), rng, 1.0);
    const Vector cond{rng.uniform(-1, 1)};
    const double x = rng.uniform(-2.5, 2.5), h = 1e-6;
    const double slope = (flow::flow_eval(f, x + h, cond).y - flow::flow_eval(f, x - h, cond).y) / (2 * h);
    EXPECT_NEAR(flow::flow_eval(f, x, cond).log_abs_deriv, std::log(slope), 1e-5);
  }
}

TEST(Nll, IdentityFlowSinglePointAtZero) {
  RngStream rng(6);
  const auto f = flow::make_flow(small_config(1), rng);
  FlowData data{Vector{0.0}, num::Matrix(1, 1)};
  EXPECT_NEAR(flow::nll_loss(f, data, all_rows(1), Mode::eval), kHalfLog2Pi, 1e-12);
}

TEST(Nll, IdentityFlowOnGaussianSampleIsEntropy) {
  RngStream rng(7);
  const auto f = flow::make_flow(small_config(1), rng);
  const std::size_t n = 10000;
  FlowData data{Vector(n), num::Matrix(n, 1)};
  for (std::size_t i = 0; i < n; ++i) {
    data.x[i] = rng.normal();
    data.cond(i, 0) = rng.normal();
  }
  EXPECT_NEAR(flow::nll_loss(f, data, all_rows(n), Mode::eval), kGaussEntropy, 0.05);
}

TEST(Nll, MatchesRecomputationFromTransform) {
  RngStream rng(8);
  const auto f = random_flow(small_config(2, 2), rng);
  FlowData data{Vector(20), num::Matrix(20, 2)};
  for (std::size_t i = 0; i < 20; ++i) {
    data.x[i] = rng.normal();
    data.cond(i, 0) = rng.normal();
    data.cond(i, 1) = rng.normal();
  }
  double expect = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto ev = flow::flow_transform(f, data.x[i], data.cond.row(i), Mode::eval);
    expect += 0.5 * ev.u * ev.u + kHalfLog2Pi - ev.logdet;
  }
  EXPECT_NEAR(flow::nll_loss(f, data, all_rows(20), Mode::eval), expect / 20, 1e-12);
  EXPECT_THROW(flow::nll_loss(f, data, {}, Mode::eval), ArgumentError);
}

// Gradients of the training loss with respect to every flow parameter.
TEST(Nll, ParameterGradientsMatchFiniteDifferences) {
  RngStream rng(9);
  for (int config = 0; config < 20; ++config) {
    const std::size_t cd = 1 + rng.below(3);
    auto f = random_flow(small_config(cd, 1 + rng.below(2), 4 + rng.below(6)), rng, 0.7);
    const std::size_t n = 5;
    FlowData data{Vector(n), num::Matrix(n, cd)};
    for (std::size_t i = 0; i < n; ++i) {
      data.x[i] = rng.uniform(-2.5, 2.5);
      for (std::size_t j = 0; j < cd; ++j) data.cond(i, j) = rng.uniform(-2, 2);
    }
    const auto rows = all_rows(n);
    auto grads = flow::zero_grads(f);
    flow::nll_loss_and_grad(f, data, rows, Mode::eval, nullptr, grads);
    auto blocks = flow::parameter_blocks(f);
    const auto gblocks = flow::parameter_blocks(grads);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const Vector theta(blocks[b].begin(), blocks[b].end());
      const auto fd = num::finite_diff_grad(
          [&](std::span<const double> th) {
            std::copy(th.begin(), th.end(), blocks[b].begin());
            const double v = flow::nll_loss(f, data, rows, Mode::eval);
            std::copy(theta.begin(), theta.end(), blocks[b].begin());
            return v;
          },
          theta, 1e-6);
      for (std::size_t k = 0; k < fd.size(); ++k)
        EXPECT_PRED2(grad_close, gblocks[b][k], fd[k]) << "config " << config << " block " << b << " k " << k;
    }
  }
}

TEST(InputJacobian, ZeroConditionerWeightsGiveZero) {
  RngStream rng(10);
  auto f = random_flow(small_config(3), rng);
  for (auto& w : f.conditioners[0].weights[0].data()) w = 0.0;
  const auto j = flow::input_jacobian(f, 0.5, Vector{1.0, -1.0, 0.2});
  for (double v : j) EXPECT_EQ(v, 0.0);
}

TEST(InputJacobian, LinearConditionerChainRule) {
  // Conditioner: raw = b + a * c1 through an (identity-like) hidden layer
  // that stays in its positive region; d u / d c1 = sum_k dT/draw_k * a_k.
  RngStream rng(11);
  auto f = flow::make_flow(small_config(1, 1, 1), rng);
  auto& net = f.conditioners[0];
  net.weights[0](0, 0) = 1.0;
  net.biases[0][0] = 10.0;  // hidden unit = c1 + 10 > 0 on the probed range
  Vector a(net.output_size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    a[k] = rng.uniform(-0.5, 0.5);
    net.weights[1](k, 0) = a[k];
    net.biases[1][k] = rng.uniform(-1, 1);
  }
  const double x = 0.7, c1 = 0.3;
  const auto raw = num::mlp_eval(net, Vector{c1});
  Vector raw_grad(raw.size(), 0.0);
  flow::rq_spline_backward(f.config.spline, raw, x, 1.0, 0.0, raw_grad);
  double expect = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) expect += raw_grad[k] * a[k];
  EXPECT_NEAR(flow::input_jacobian(f, x, Vector{c1})[0], expect, 1e-4);
}

TEST(InputJacobian, MatchesOracleAndReverseMode) {
  RngStream rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = random_flow(small_config(3, 1 + rng.below(2)), rng, 0.8);
    const double x = rng.uniform(-2, 2);
    const Vector cond{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const auto j = flow::input_jacobian(f, x, cond);
    const auto fd = num::finite_diff_grad(
        [&](std::span<const double> c) { return flow::flow_eval(f, x, c).y; }, cond, 1e-4);
    const auto g = flow::input_gradient(f, x, cond);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(j[k], fd[k], 1e-6);
      EXPECT_NEAR(j[k], g[k], 1e-5 + 1e-4 * std::abs(g[k]));
    }
  }
}

TEST(TrainFlow, IndependentGaussianTargetReachesEntropy) {
  RngStream data_rng(13);
  const std::size_t n = 1000;
  FlowData data{Vector(n), num::Matrix(n, 2)};
  for (std::size_t i = 0; i < n; ++i) {
    data.x[i] = data_rng.normal();
    data.cond(i, 0) = data_rng.normal();
    data.cond(i, 1) = data_rng.normal();
  }
  RngStream rng(14);
  const auto f = flow::train_flow(data, flow::TrainConfig{}, rng);
  EXPECT_NEAR(flow::nll_loss(f, data, all_rows(n), Mode::eval), kGaussEntropy, 0.1);
}

TEST(TrainFlow, LearnsStrongConditionalDependence) {
  RngStream data_rng(15);
  const std::size_t n = 1000;
  FlowData data{Vector(n), num::Matrix(n, 1)};
  for (std::size_t i = 0; i < n; ++i) {
    const double c = data_rng.normal();
    data.cond(i, 0) = c;
    data.x[i] = 2.0 * c + 0.1 * data_rng.normal();
  }
  // Standardize x so it lives inside the spline bound, as the pipeline does.
  double m = 0, s = 0;
  for (double v : data.x) m += v / n;
  for (double v : data.x) s += (v - m) * (v - m) / n;
  for (double& v : data.x) v = (v - m) / std::sqrt(s);
  RngStream init(16);
  const auto identity = flow::make_flow(flow::TrainConfig{}.flow_config(1), init);
  const double before = flow::nll_loss(identity, data, all_rows(n), Mode::eval);
  RngStream rng(16);
  flow::TrainConfig cfg;
  cfg.epochs = 30;
  const auto f = flow::train_flow(data, cfg, rng);
  EXPECT_LT(flow::nll_loss(f, data, all_rows(n), Mode::eval), before - 0.5);
}

TEST(TrainFlow, DeterministicGivenSeed) {
  RngStream data_rng(17);
  FlowData data{Vector(200), num::Matrix(200, 2)};
  for (std::size_t i = 0; i < 200; ++i) {
    data.x[i] = data_rng.normal();
    data.cond(i, 0) = data_rng.normal();
    data.cond(i, 1) = data.x[i] + data_rng.normal();
  }
  flow::TrainConfig cfg;
  cfg.epochs = 2;
  RngStream a(5), b(5);
  const auto fa = flow::train_flow(data, cfg, a);
  const auto fb = flow::train_flow(data, cfg, b);
  for (std::size_t l = 0; l < fa.conditioners.size(); ++l) {
    EXPECT_EQ(fa.conditioners[l].weights, fb.conditioners[l].weights);
    EXPECT_EQ(fa.conditioners[l].biases, fb.conditioners[l].biases);
  }
}

TEST(TrainFlow, RejectsInvalidConfigAndData) {
  FlowData data{Vector{0.1, 0.2}, num::Matrix(2, 1)};
  RngStream rng(1);
  flow::TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(flow::train_flow(data, cfg, rng), ArgumentError);
  FlowData ragged{Vector{0.1, 0.2}, num::Matrix(3, 1)};
  EXPECT_THROW(flow::train_flow(ragged, flow::TrainConfig{}, rng), DimensionError);
}
