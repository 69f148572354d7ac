#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "rootflow/error.hpp"
#include "rootflow/flow/tmi.hpp"
#include "rootflow/num/finite_diff.hpp"

using namespace rootflow;
using num::Mode;
using num::RngStream;
using num::Vector;

namespace {

flow::TrainConfig small_train() {
  flow::TrainConfig c;
  c.hidden_units = 6;
  c.dropout = 0.0;
  return c;
}

}  // namespace

TEST(Tmi, OneDimensionReducesToPlainFlow) {
  RngStream rng(1);
  auto tmi = flow::make_tmi(1, small_train(), rng);
  testing_helpers::randomize(tmi, rng);
  const auto ev = flow::tmi_forward(tmi, Vector{0.4}, Mode::eval);
  const auto direct = flow::flow_eval(tmi.coord_flows[0], 0.4, {});
  EXPECT_EQ(ev.u[0], direct.y);
  EXPECT_EQ(ev.logdet, direct.log_abs_deriv);
}

TEST(Tmi, FreshMapIsIdentity) {
  RngStream rng(2);
  const auto tmi = flow::make_tmi(4, small_train(), rng);
  const Vector x{0.1, -1.2, 2.2, 0.7};
  const auto ev = flow::tmi_forward(tmi, x, Mode::eval);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(ev.u[j], x[j], 1e-12);
  EXPECT_NEAR(ev.logdet, 0.0, 1e-12);
  const auto jac = flow::tmi_jacobian(tmi, x);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(jac(i, k), i == k ? 1.0 : 0.0, 1e-8);
}

TEST(Tmi, CoordinateConditionsOnlyOnPredecessors) {
  RngStream rng(3);
  const auto tmi = flow::make_tmi(3, small_train(), rng);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(tmi.coord_flows[j].cond_dim(), j);
  EXPECT_THROW(flow::tmi_forward(tmi, Vector{1.0, 2.0}, Mode::eval), DimensionError);
}

TEST(Tmi, FullFiniteDifferenceJacobianIsLowerTriangularWithPositiveDiagonal) {
  RngStream rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto tmi = flow::make_tmi(4, small_train(), rng);
    testing_helpers::randomize(tmi, rng, 0.8);
    Vector x(4);
    for (double& v : x) v = rng.uniform(-2, 2);
    // Probe every coordinate, including those the library skips.
    for (std::size_t i = 0; i < 4; ++i) {
      const auto row = num::finite_diff_grad(
          [&](std::span<const double> xx) { return flow::tmi_map(tmi, xx)[i]; }, x, 1e-4);
      for (std::size_t k = i + 1; k < 4; ++k) EXPECT_LE(std::abs(row[k]), 1e-8);
      EXPECT_GT(row[i], 0.0);
    }
    const auto jac = flow::tmi_jacobian(tmi, x);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t k = i + 1; k < 4; ++k) EXPECT_EQ(jac(i, k), 0.0);
  }
}

TEST(Tmi, BackwardMatchesFiniteDifferences) {
  RngStream rng(5);
  auto tmi = flow::make_tmi(3, small_train(), rng);
  testing_helpers::randomize(tmi, rng, 0.6);
  const Vector x{0.3, -0.8, 1.1}, c{0.5, -1.0, 0.25};
  const double cl = 0.7;
  auto loss = [&](std::span<const double> xx) {
    const auto ev = flow::tmi_forward(tmi, xx, Mode::eval);
    double s = cl * ev.logdet;
    for (std::size_t j = 0; j < 3; ++j) s += c[j] * ev.u[j];
    return s;
  };
  auto grads = flow::zero_grads(tmi);
  const auto ev = flow::tmi_forward(tmi, x, Mode::eval);
  const auto gx = flow::tmi_backward(tmi, ev, c, cl, grads);
  const auto fdx = num::finite_diff_grad(loss, x, 1e-6);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(gx[k], fdx[k], 1e-6);

  auto blocks = flow::parameter_blocks(tmi);
  const auto gblocks = flow::parameter_blocks(grads);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Vector theta(blocks[b].begin(), blocks[b].end());
    const auto fd = num::finite_diff_grad(
        [&](std::span<const double> th) {
          std::copy(th.begin(), th.end(), blocks[b].begin());
          const double v = loss(x);
          std::copy(theta.begin(), theta.end(), blocks[b].begin());
          return v;
        },
        theta, 1e-6);
    for (std::size_t k = 0; k < fd.size(); ++k)
      EXPECT_NEAR(gblocks[b][k], fd[k], 1e-6 + 1e-5 * std::abs(fd[k]));
  }
}
