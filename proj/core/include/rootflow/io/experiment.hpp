#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "rootflow/eval/metrics.hpp"
#include "rootflow/flow/conditional_flow.hpp"
#include "rootflow/num/matrix.hpp"
#include "rootflow/num/rng.hpp"
#include "rootflow/order/sequential.hpp"
#include "rootflow/perm/perm_learner.hpp"
#include "rootflow/scm/dag.hpp"
#include "rootflow/scm/dataset.hpp"

namespace rootflow::io {

enum class Method { sequential, permutation, varsort };

std::string_view to_string(Method m) noexcept;
// "sequential", "permutation", "varsort"; throws ArgumentError otherwise.
Method parse_method(std::string_view text);

// Field names (JSON keys) match the CLI flags with '-' replaced by '_'.
struct ExperimentConfig {
  Method method = Method::sequential;
  std::size_t d = 4;
  std::size_t n = 1000;
  std::vector<std::uint64_t> seeds{0};
  std::optional<double> edge_prob;

  // Flow training.
  std::size_t epochs = 10;
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t flow_layers = 1;
  std::size_t mlp_hidden_layers = 1;
  std::size_t hidden_units = 128;
  double dropout = 0.1;
  std::size_t spline_bins = 8;
  double spline_bound = 3.0;

  // Sequential method.
  order::JacAggregation jac_agg = order::JacAggregation::max;
  double jacobian_step = 1e-4;

  // Permutation baseline.
  double t = 1e-4;
  double lambda = 0.5;
  std::size_t sinkhorn_iters = 20;
  bool gumbel = true;

  // Data from CSV instead of the synthetic generator; d and n then come from
  // the file. Without `graph` no count_backward is computed.
  std::optional<std::string> data;
  std::optional<std::string> graph;
  // Random column relabeling of every dataset before discovery.
  bool shuffle = true;

  unsigned threads = 0;
  std::optional<std::string> output;

  // Throws ArgumentError naming the offending field.
  void validate() const;

  flow::TrainConfig train_config() const;
  order::SequentialConfig sequential_config() const;
  perm::PermConfig perm_config() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
// Unknown keys are rejected so typos do not silently fall back to defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies one uniformly random relabeling to the columns and to the graph:
// new column k is old column perm[k].
struct Shuffled {
  scm::Dataset data;
  scm::Dag dag;
  std::vector<std::size_t> perm;
};
Shuffled shuffle_columns(const scm::Dataset& ds, const scm::Dag& dag, num::RngStream& rng);

// Per-seed random streams: synthetic data uses substreams 0..2 of the seed,
// the column shuffle substream 3, the method substream 4.
inline constexpr std::uint64_t kShuffleStream = 3;
inline constexpr std::uint64_t kMethodStream = 4;

struct SeedRecord {
  std::uint64_t seed = 0;
  std::optional<std::string> error;
  std::vector<std::string> column_names;
  std::optional<scm::Dag> graph;  // after shuffling; absent for unscored data
  std::optional<eval::CausalOrder> order;
  std::optional<std::size_t> count_backward;
  std::vector<order::Round> rounds;                  // sequential
  std::optional<num::Matrix> soft_permutation;       // permutation
  std::vector<double> epoch_losses;                  // permutation
  double seconds = 0.0;
};

struct ResultRecord {
  ExperimentConfig config;
  std::vector<SeedRecord> seeds;  // ascending by seed
  // Over scored seeds; std is absent with a single value.
  std::vector<double> cb_values;
  std::optional<double> cb_mean;
  std::optional<double> cb_std;
  double wall_seconds = 0.0;
};

// Runs the configured method for every seed. A failing seed is recorded and
// the run continues; throws Error if every seed fails.
ResultRecord run_experiment(const ExperimentConfig& cfg);

// Result JSON. Wall-clock values and the thread count live under the
// top-level "timing" key only.
nlohmann::json to_json(const ResultRecord& rec, bool include_timing = true);
std::string dump_result(const ResultRecord& rec, bool include_timing = true);

nlohmann::json to_json(const order::Round& round);
nlohmann::json to_json(const num::Matrix& m);

}  // namespace rootflow::io
