#include "rootflow/order/sequential.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rootflow/num/parallel.hpp"

namespace rootflow::order {
namespace {

double aggregate_abs(std::vector<double>& values, JacAggregation agg) {
  switch (agg) {
    case JacAggregation::max:
      return *std::max_element(values.begin(), values.end());
    case JacAggregation::mean:
      return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    case JacAggregation::p95: {
      // Linear interpolation between closest ranks.
      std::sort(values.begin(), values.end());
      const double pos = 0.95 * static_cast<double>(values.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, values.size() - 1);
      const double frac = pos - static_cast<double>(lo);
      return values[lo] + frac * (values[hi] - values[lo]);
    }
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(JacAggregation agg) noexcept {
  switch (agg) {
    case JacAggregation::max: return "max";
    case JacAggregation::mean: return "mean";
    case JacAggregation::p95: return "p95";
  }
  return "max";
}

JacAggregation parse_jac_aggregation(std::string_view text) {
  if (text == "max") return JacAggregation::max;
  if (text == "mean") return JacAggregation::mean;
  if (text == "p95") return JacAggregation::p95;
  throw ArgumentError("unknown Jacobian aggregation '" + std::string(text) + "'");
}

void SequentialConfig::validate() const {
  train.validate();
  if (!(jacobian_step > 0.0)) throw ArgumentError("jacobian_step must be > 0");
}

flow::FlowData flow_data_for(const scm::Dataset& ds, std::size_t i) {
  if (i >= ds.d()) throw ArgumentError("variable index out of range");
  flow::FlowData fd;
  fd.x = ds.values.column(i);
  fd.cond = num::Matrix(ds.n(), ds.d() - 1);
  for (std::size_t r = 0; r < ds.n(); ++r) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < ds.d(); ++c)
      if (c != i) fd.cond(r, k++) = ds.values(r, c);
  }
  return fd;
}

RootScore score_flow(const flow::ConditionalFlow& flow, const scm::Dataset& ds, std::size_t i,
                     JacAggregation aggregation, double h) {
  const auto fd = flow_data_for(ds, i);
  const std::size_t m = fd.cond.cols();
  std::vector<std::vector<double>> abs_jac(m, std::vector<double>(fd.size()));
  for (std::size_t r = 0; r < fd.size(); ++r) {
    const auto jac = flow::input_jacobian(flow, fd.x[r], fd.cond.row(r), h);
    for (std::size_t j = 0; j < m; ++j) abs_jac[j][r] = std::abs(jac[j]);
  }
  RootScore score;
  score.variable = i;
  score.jac_row.resize(m);
  for (std::size_t j = 0; j < m; ++j) score.jac_row[j] = aggregate_abs(abs_jac[j], aggregation);
  score.max_jac = m == 0 ? 0.0 : *std::max_element(score.jac_row.begin(), score.jac_row.end());
  return score;
}

RootScore root_score(std::size_t i, const scm::Dataset& ds, const SequentialConfig& cfg,
                     num::RngStream& rng) {
  if (ds.d() < 2) throw ArgumentError("root scoring needs at least 2 variables");
  if (!ds.standardized) throw ArgumentError("root scoring expects a standardized dataset");
  const auto fd = flow_data_for(ds, i);
  try {
    const auto flow = flow::train_flow(fd, cfg.train, rng);
    return score_flow(flow, ds, i, cfg.aggregation, cfg.jacobian_step);
  } catch (const TrainingError& e) {
    throw TrainingError(e.step(), "variable " + std::to_string(i) + ": " + e.what());
  }
}

std::size_t select_root(std::span<const RootScore> scores) {
  if (scores.empty()) throw ArgumentError("select_root on empty score list");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k)
    if (scores[k].max_jac < scores[best].max_jac) best = k;
  return best;
}

RootSearch find_root(const scm::Dataset& ds, const SequentialConfig& cfg, num::RngStream& rng,
                     std::span<const std::size_t> labels) {
  cfg.validate();
  if (ds.d() < 2) throw ArgumentError("find_root needs at least 2 variables");
  if (!labels.empty() && labels.size() != ds.d()) throw DimensionError("labels size mismatch");
  RootSearch search;
  search.scores.resize(ds.d());
  num::parallel_for(ds.d(), cfg.threads, [&](std::size_t k) {
    auto sub = rng.derive(labels.empty() ? k : labels[k]);
    search.scores[k] = root_score(k, ds, cfg, sub);
  });
  search.chosen = select_root(search.scores);
  return search;
}

OrderResult discover_order(const scm::Dataset& ds, const SequentialConfig& cfg,
                           num::RngStream& rng) {
  cfg.validate();
  ds.validate();
  if (ds.d() < 2) throw ArgumentError("discover_order needs d >= 2");
  if (!ds.standardized) throw ArgumentError("discover_order expects a standardized dataset");

  OrderResult result;
  std::vector<std::size_t> remaining(ds.d());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  for (std::size_t round = 0; remaining.size() > 1; ++round) {
    const auto current = ds.select_columns(remaining);
    auto round_rng = rng.derive(round);
    RootSearch search;
    try {
      search = find_root(current, cfg, round_rng, remaining);
    } catch (const Error& e) {
      throw DiscoveryError(result, "round " + std::to_string(round) + ": " + e.what());
    }
    Round rec;
    rec.remaining = remaining;
    for (auto s : search.scores) {
      s.variable = remaining[s.variable];
      rec.scores.push_back(std::move(s));
    }
    rec.chosen = remaining[search.chosen];
    result.order.push_back(rec.chosen);
    result.rounds.push_back(std::move(rec));
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(search.chosen));
  }
  result.order.push_back(remaining.front());
  return result;
}

}  // namespace rootflow::order
