#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rootflow/error.hpp"
#include "rootflow/flow/conditional_flow.hpp"
#include "rootflow/num/rng.hpp"
#include "rootflow/scm/dataset.hpp"

namespace rootflow::order {

// How |dT_i/dx_j| is reduced over samples before taking the max over j.
enum class JacAggregation { max, mean, p95 };

std::string_view to_string(JacAggregation agg) noexcept;
// Accepts "max", "mean", "p95"; throws ArgumentError otherwise.
JacAggregation parse_jac_aggregation(std::string_view text);

struct SequentialConfig {
  flow::TrainConfig train{};
  JacAggregation aggregation = JacAggregation::max;
  double jacobian_step = 1e-4;
  // Workers for the per-variable trainings of a round (0 = hardware).
  unsigned threads = 0;

  void validate() const;
};

// Root evidence for one candidate variable. jac_row is indexed like the
// conditioning columns (all other current columns, ascending).
struct RootScore {
  std::size_t variable = 0;
  double max_jac = 0.0;
  std::vector<double> jac_row;
};

struct Round {
  std::vector<std::size_t> remaining;
  std::vector<RootScore> scores;
  std::size_t chosen = 0;
};

// order[k] is the k-th variable (original column index) of the discovered
// causal order; rounds[k] chose order[k].
struct OrderResult {
  std::vector<std::size_t> order;
  std::vector<Round> rounds;
};

struct RootSearch {
  std::vector<RootScore> scores;
  std::size_t chosen = 0;  // index into scores

  const RootScore& root() const { return scores.at(chosen); }
};

// Raised when a round fails; carries the rounds completed so far.
class DiscoveryError : public Error {
 public:
  DiscoveryError(OrderResult partial, const std::string& what)
      : Error(what), partial_(std::move(partial)) {}
  const OrderResult& partial() const noexcept { return partial_; }

 private:
  OrderResult partial_;
};

// Splits column i off as the flow target; the rest, in order, are the
// conditioning inputs.
flow::FlowData flow_data_for(const scm::Dataset& ds, std::size_t i);

// Scores an already trained flow for column i of ds.
RootScore score_flow(const flow::ConditionalFlow& flow, const scm::Dataset& ds, std::size_t i,
                     JacAggregation aggregation, double h);

// Trains T_i(x_i | rest) and scores it. Throws TrainingError naming i.
RootScore root_score(std::size_t i, const scm::Dataset& ds, const SequentialConfig& cfg,
                     num::RngStream& rng);

// Index of the smallest max_jac, lowest index on ties.
std::size_t select_root(std::span<const RootScore> scores);

// Scores every column of ds. Column k trains on rng.derive(labels[k]) (labels
// default to 0..d-1), so results do not depend on thread scheduling.
RootSearch find_root(const scm::Dataset& ds, const SequentialConfig& cfg, num::RngStream& rng,
                     std::span<const std::size_t> labels = {});

// Repeatedly finds and removes the root until one variable is left. Round r
// uses substreams (r, variable). Requires a standardized dataset with d >= 2.
OrderResult discover_order(const scm::Dataset& ds, const SequentialConfig& cfg,
                           num::RngStream& rng);

}  // namespace rootflow::order
