#include "rootflow/scm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rootflow/error.hpp"

namespace rootflow::scm {

double SynthConfig::effective_edge_prob() const {
  const double p = edge_prob ? *edge_prob : 2.0 / (static_cast<double>(d) - 1.0);
  return std::clamp(p, 0.0, 1.0);
}

void SynthConfig::validate() const {
  if (d < 2) throw ArgumentError("synthetic data needs d >= 2");
  if (n < 2) throw ArgumentError("synthetic data needs n >= 2");
  if (gen_layers < 1) throw ArgumentError("gen_layers must be >= 1");
  if (gen_hidden_width < 1) throw ArgumentError("gen_hidden_width must be >= 1");
  if (!(weight_low > 0.0 && weight_low <= weight_high))
    throw ArgumentError("need 0 < weight_low <= weight_high");
  if (!(leaky_slope > 0.0)) throw ArgumentError("leaky_slope must be > 0");
  if (!(bias_range >= 0.0)) throw ArgumentError("bias_range must be >= 0");
}

double SyntheticScm::evaluate_node(std::size_t node, std::span<const double> parent_values,
                                   double noise) const {
  const auto& fn = node_fns[node];
  num::Vector input(parent_values.begin(), parent_values.end());
  input.push_back(noise);
  return num::mlp_eval(fn, input)[0];
}

Dag sample_dag(std::size_t d, double edge_prob, num::RngStream& rng) {
  if (d < 2) throw ArgumentError("sample_dag needs d >= 2, got " + std::to_string(d));
  edge_prob = std::clamp(edge_prob, 0.0, 1.0);
  const auto perm = rng.permutation(d);
  Dag g(d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b)
      if (rng.uniform() < edge_prob) g.add_edge(perm[a], perm[b]);
  return g;
}

SyntheticScm sample_scm(const Dag& dag, const SynthConfig& cfg, num::RngStream& rng) {
  cfg.validate();
  if (cfg.d != dag.size())
    throw DimensionError("SynthConfig.d = " + std::to_string(cfg.d) + " but DAG has " +
                         std::to_string(dag.size()) + " nodes");
  const double mean_weight = 0.5 * (cfg.weight_low + cfg.weight_high);
  SyntheticScm scm;
  scm.dag = dag;
  for (std::size_t node = 0; node < dag.size(); ++node) {
    const std::size_t arity = dag.parents(node).size() + 1;
    num::MlpParams fn;
    fn.leaky_slope = cfg.leaky_slope;
    std::vector<double> scales;
    std::size_t fan_in = arity;
    for (std::size_t l = 0; l < cfg.gen_layers; ++l) {
      const std::size_t fan_out = (l + 1 == cfg.gen_layers) ? 1 : cfg.gen_hidden_width;
      const double scale = static_cast<double>(fan_in) * mean_weight;
      num::Matrix w(fan_out, fan_in);
      for (double& v : w.data()) v = rng.uniform(cfg.weight_low, cfg.weight_high) / scale;
      num::Vector b(fan_out);
      for (double& v : b) v = rng.uniform(-cfg.bias_range, cfg.bias_range);
      fn.weights.push_back(std::move(w));
      fn.biases.push_back(std::move(b));
      scales.push_back(scale);
      fan_in = fan_out;
    }
    fn.validate();
    scm.node_fns.push_back(std::move(fn));
    scm.weight_scales.push_back(std::move(scales));
  }
  return scm;
}

Dataset generate(const SyntheticScm& scm, std::size_t n, num::RngStream& rng) {
  if (n < 2) throw ArgumentError("generate needs n >= 2");
  const std::size_t d = scm.dag.size();
  const auto topo = scm.dag.topological_order();
  std::vector<std::vector<std::size_t>> parents(d);
  for (std::size_t v = 0; v < d; ++v) parents[v] = scm.dag.parents(v);

  num::Matrix values(n, d);
  num::Vector noise(d);
  num::Vector pa;
  for (std::size_t r = 0; r < n; ++r) {
    for (double& u : noise) u = rng.normal();
    for (std::size_t v : topo) {
      pa.clear();
      for (std::size_t p : parents[v]) pa.push_back(values(r, p));
      const double x = scm.evaluate_node(v, pa, noise[v]);
      if (!std::isfinite(x))
        throw NumericError("non-finite value generated for node " + std::to_string(v) +
                           " at sample " + std::to_string(r));
      values(r, v) = x;
    }
  }
  return make_dataset(std::move(values));
}

SyntheticData synthesize(const SynthConfig& cfg) {
  cfg.validate();
  num::RngStream root(cfg.seed);
  auto dag_rng = root.derive(0);
  auto scm_rng = root.derive(1);
  auto data_rng = root.derive(2);
  Dag dag = sample_dag(cfg.d, cfg.effective_edge_prob(), dag_rng);
  SyntheticScm scm = sample_scm(dag, cfg, scm_rng);
  Dataset data = generate(scm, cfg.n, data_rng);
  return {std::move(scm), std::move(data)};
}

}  // namespace rootflow::scm
