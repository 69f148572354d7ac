#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "rootflow/error.hpp"
#include "rootflow/order/sequential.hpp"
#include "rootflow/scm/synth.hpp"

using namespace rootflow;
using order::JacAggregation;
using order::RootScore;

namespace {

scm::Dataset gaussian_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  num::RngStream rng(seed);
  num::Matrix m(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) m(r, c) = rng.normal();
    // Add a little dependence so the conditioners have something to learn.
    for (std::size_t c = 1; c < d; ++c) m(r, c) += 0.8 * m(r, c - 1);
  }
  return scm::standardize(scm::make_dataset(std::move(m)));
}

order::SequentialConfig quick_config() {
  order::SequentialConfig cfg;
  cfg.train.epochs = 2;
  cfg.train.hidden_units = 8;
  cfg.train.batch_size = 32;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST(JacAggregation, ParsesAndPrints) {
  for (auto a : {JacAggregation::max, JacAggregation::mean, JacAggregation::p95})
    EXPECT_EQ(order::parse_jac_aggregation(order::to_string(a)), a);
  EXPECT_THROW(order::parse_jac_aggregation("median"), ArgumentError);
}

TEST(FlowData, TargetIsColumnAndRestAreConditions) {
  auto ds = scm::make_dataset(num::Matrix{{1, 2, 3}, {4, 5, 6}});
  const auto fd = order::flow_data_for(ds, 1);
  EXPECT_EQ(fd.x, (num::Vector{2, 5}));
  EXPECT_EQ(fd.cond, (num::Matrix{{1, 3}, {4, 6}}));
  EXPECT_THROW(order::flow_data_for(ds, 3), ArgumentError);
}

TEST(ScoreFlow, IdentityFlowHasZeroScore) {
  const auto ds = gaussian_dataset(100, 3, 1);
  num::RngStream rng(2);
  const auto flow = flow::make_flow(testing_helpers::small_config(2), rng);
  for (auto agg : {JacAggregation::max, JacAggregation::mean, JacAggregation::p95}) {
    const auto s = order::score_flow(flow, ds, 0, agg, 1e-4);
    EXPECT_EQ(s.variable, 0u);
    EXPECT_EQ(s.max_jac, 0.0);
    EXPECT_EQ(s.jac_row, (std::vector<double>{0.0, 0.0}));
  }
}

TEST(ScoreFlow, AggregatesAbsoluteJacobianOverSamples) {
  const auto ds = gaussian_dataset(57, 3, 3);
  num::RngStream rng(4);
  const auto flow = testing_helpers::random_flow(testing_helpers::small_config(2), rng);
  const auto fd = order::flow_data_for(ds, 2);
  std::vector<std::vector<double>> cols(2);
  for (std::size_t r = 0; r < fd.size(); ++r) {
    const auto jac = flow::input_jacobian(flow, fd.x[r], fd.cond.row(r), 1e-4);
    for (std::size_t j = 0; j < 2; ++j) cols[j].push_back(std::abs(jac[j]));
  }
  std::vector<double> mx, mean, p95;
  for (auto& c : cols) {
    mx.push_back(*std::max_element(c.begin(), c.end()));
    double s = 0;
    for (double v : c) s += v;
    mean.push_back(s / c.size());
    // 57 samples: position 0.95 * 56 = 53.2.
    std::sort(c.begin(), c.end());
    p95.push_back(c[53] + 0.2 * (c[54] - c[53]));
  }
  const auto smax = order::score_flow(flow, ds, 2, JacAggregation::max, 1e-4);
  const auto smean = order::score_flow(flow, ds, 2, JacAggregation::mean, 1e-4);
  const auto sp95 = order::score_flow(flow, ds, 2, JacAggregation::p95, 1e-4);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_DOUBLE_EQ(smax.jac_row[j], mx[j]);
    EXPECT_NEAR(smean.jac_row[j], mean[j], 1e-14);
    EXPECT_NEAR(sp95.jac_row[j], p95[j], 1e-14);
  }
  EXPECT_EQ(smax.max_jac, std::max(mx[0], mx[1]));
  EXPECT_GT(smax.max_jac, 0.0);
}

TEST(SelectRoot, SmallestScoreWithLowestIndexOnTies) {
  std::vector<RootScore> s(4);
  const double v[] = {0.5, 0.2, 0.2, 0.9};
  for (int k = 0; k < 4; ++k) s[k].max_jac = v[k];
  EXPECT_EQ(order::select_root(s), 1u);
  for (auto& x : s) x.max_jac = 1.0;
  EXPECT_EQ(order::select_root(s), 0u);
  EXPECT_THROW(order::select_root(std::vector<RootScore>{}), ArgumentError);
}

TEST(SelectRoot, InvariantToPositiveRescaling) {
  num::RngStream rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RootScore> s(2 + rng.below(8));
    for (auto& x : s) x.max_jac = rng.uniform();
    const auto before = order::select_root(s);
    const double c = std::exp(rng.uniform(-5.0, 5.0));
    for (auto& x : s) x.max_jac *= c;
    EXPECT_EQ(order::select_root(s), before);
  }
}

TEST(RootScore, RejectsUnstandardizedAndTooSmallData) {
  auto cfg = quick_config();
  num::RngStream rng(6);
  auto raw = scm::make_dataset(num::Matrix{{1, 2}, {3, 5}, {0, 1}});
  EXPECT_THROW(order::root_score(0, raw, cfg, rng), ArgumentError);
  EXPECT_THROW(order::discover_order(raw, cfg, rng), ArgumentError);
  auto one = scm::standardize(scm::make_dataset(num::Matrix{{1}, {2}, {3}}));
  EXPECT_THROW(order::discover_order(one, cfg, rng), ArgumentError);
  cfg.jacobian_step = 0.0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}

TEST(DiscoverOrder, RoundsShrinkAndOrderIsPermutation) {
  const auto ds = gaussian_dataset(200, 4, 7);
  num::RngStream rng(8);
  const auto res = order::discover_order(ds, quick_config(), rng);
  ASSERT_EQ(res.order.size(), 4u);
  EXPECT_EQ(std::set<std::size_t>(res.order.begin(), res.order.end()).size(), 4u);
  ASSERT_EQ(res.rounds.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    const auto& round = res.rounds[r];
    EXPECT_EQ(round.remaining.size(), 4 - r);
    EXPECT_EQ(round.scores.size(), 4 - r);
    EXPECT_EQ(round.chosen, res.order[r]);
    // The chosen variable has the smallest score of its round.
    double best = INFINITY;
    std::size_t best_var = 0;
    for (const auto& s : round.scores) {
      EXPECT_EQ(s.jac_row.size(), 3 - r);
      if (s.max_jac < best) {
        best = s.max_jac;
        best_var = s.variable;
      }
    }
    EXPECT_EQ(best_var, round.chosen);
    for (std::size_t k = 0; k < r; ++k)
      EXPECT_EQ(std::count(round.remaining.begin(), round.remaining.end(), res.order[k]), 0);
  }
}

TEST(DiscoverOrder, DeterministicAndThreadIndependent) {
  const auto ds = gaussian_dataset(150, 3, 9);
  auto cfg = quick_config();
  num::RngStream a(10), b(10);
  const auto r1 = order::discover_order(ds, cfg, a);
  cfg.threads = 3;
  const auto r2 = order::discover_order(ds, cfg, b);
  EXPECT_EQ(r1.order, r2.order);
  for (std::size_t r = 0; r < r1.rounds.size(); ++r)
    for (std::size_t k = 0; k < r1.rounds[r].scores.size(); ++k)
      EXPECT_EQ(r1.rounds[r].scores[k].max_jac, r2.rounds[r].scores[k].max_jac);
}

TEST(DiscoverOrder, IndependentRootsScoreNearZero) {
  // Two independent Gaussian roots under the default training settings:
  // neither conditional should pick up a dependence.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    num::RngStream root(seed);
    auto data_rng = root.derive(2);
    num::Matrix m(1000, 2);
    for (double& v : m.data()) v = data_rng.normal();
    const auto ds = scm::standardize(scm::make_dataset(std::move(m)));
    order::SequentialConfig cfg;
    cfg.threads = 1;
    auto rng = root.derive(4);
    const auto search = order::find_root(ds, cfg, rng);
    for (const auto& score : search.scores) EXPECT_LT(score.max_jac, 0.2) << "seed " << seed;
  }
}
