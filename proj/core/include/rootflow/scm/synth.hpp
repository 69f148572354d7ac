#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rootflow/num/mlp.hpp"
#include "rootflow/num/rng.hpp"
#include "rootflow/scm/dag.hpp"
#include "rootflow/scm/dataset.hpp"

namespace rootflow::scm {

struct SynthConfig {
  std::size_t d = 4;
  std::size_t n = 1000;
  // Unset means 2 / (d - 1). Clamped to [0, 1] either way.
  std::optional<double> edge_prob;
  std::size_t gen_layers = 8;
  std::size_t gen_hidden_width = 16;
  double weight_low = 0.5;
  double weight_high = 2.0;
  // Biases are drawn uniformly from [-bias_range, bias_range].
  double bias_range = 1.0;
  double leaky_slope = 0.2;
  std::uint64_t seed = 0;

  double effective_edge_prob() const;
  void validate() const;
};

// One positive-weight MLP per node mapping (parent values..., noise) to the
// node value. Each layer's drawn weights are divided by weight_scales[i][l]
// (fan-in times the mean of the weight range) so magnitudes stay O(1)
// through deep stacks; the undivided draws lie in [weight_low, weight_high].
struct SyntheticScm {
  Dag dag;
  std::vector<num::MlpParams> node_fns;
  std::vector<std::vector<double>> weight_scales;

  double evaluate_node(std::size_t node, std::span<const double> parent_values,
                       double noise) const;
};

struct SyntheticData {
  SyntheticScm scm;
  Dataset data;
};

// Random node permutation, then each forward pair gets an edge with
// probability edge_prob. Throws ArgumentError for d < 2.
Dag sample_dag(std::size_t d, double edge_prob, num::RngStream& rng);

SyntheticScm sample_scm(const Dag& dag, const SynthConfig& cfg, num::RngStream& rng);

// u ~ N(0, I_d) per sample, nodes evaluated in topological order. Output is
// not standardized. Throws NumericError on non-finite values.
Dataset generate(const SyntheticScm& scm, std::size_t n, num::RngStream& rng);

// sample_dag -> sample_scm -> generate on substreams 0, 1, 2 of cfg.seed.
SyntheticData synthesize(const SynthConfig& cfg);

}  // namespace rootflow::scm
