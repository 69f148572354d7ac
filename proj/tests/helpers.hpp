#pragma once

#include <cstddef>
#include <vector>

#include "rootflow/flow/conditional_flow.hpp"
#include "rootflow/flow/tmi.hpp"
#include "rootflow/num/rng.hpp"

namespace testing_helpers {

// A flow whose every parameter (including the zero-initialized output layer)
// is random, so it is far from the identity.
inline rootflow::flow::ConditionalFlow random_flow(const rootflow::flow::FlowConfig& cfg,
                                                   rootflow::num::RngStream& rng, double scale = 0.5) {
  auto f = rootflow::flow::make_flow(cfg, rng);
  for (auto block : rootflow::flow::parameter_blocks(f))
    for (double& v : block) v += scale * rng.uniform(-1.0, 1.0);
  return f;
}

inline rootflow::flow::FlowConfig small_config(std::size_t cond_dim, std::size_t layers = 1,
                                               std::size_t hidden = 8, double dropout = 0.0) {
  rootflow::flow::FlowConfig c;
  c.cond_dim = cond_dim;
  c.n_layers = layers;
  c.hidden_units = hidden;
  c.dropout = dropout;
  return c;
}

inline void randomize(rootflow::flow::TmiFlow& tmi, rootflow::num::RngStream& rng, double scale = 0.5) {
  for (auto block : rootflow::flow::parameter_blocks(tmi))
    for (double& v : block) v += scale * rng.uniform(-1.0, 1.0);
}

}  // namespace testing_helpers
