#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rootflow/flow/conditional_flow.hpp"

namespace rootflow::flow {

// Triangular monotone increasing map R^d -> R^d: output j is
// coord_flows[j](x_j | x_0..x_{j-1}).
struct TmiFlow {
  std::vector<ConditionalFlow> coord_flows;

  std::size_t dim() const noexcept { return coord_flows.size(); }
};

using TmiGrads = std::vector<FlowGrads>;

struct TmiEval {
  num::Vector u;
  double logdet = 0.0;
  std::vector<FlowEval> coords;
};

// Coordinate j gets a flow with cond_dim = j; everything else from `cfg`.
TmiFlow make_tmi(std::size_t d, const TrainConfig& cfg, num::RngStream& rng);

TmiGrads zero_grads(const TmiFlow& tmi);

TmiEval tmi_forward(const TmiFlow& tmi, std::span<const double> x, Mode mode,
                    num::RngStream* rng = nullptr);

// Eval-mode u only.
num::Vector tmi_map(const TmiFlow& tmi, std::span<const double> x);

// Accumulates parameter gradients; returns dLoss/dx.
num::Vector tmi_backward(const TmiFlow& tmi, const TmiEval& eval, std::span<const double> grad_u,
                         double grad_logdet, TmiGrads& grads);

// Central-difference Jacobian du/dx (eval mode, step h). Entries above the
// diagonal are structurally zero and are not probed.
num::Matrix tmi_jacobian(const TmiFlow& tmi, std::span<const double> x, double h = 1e-4);

std::vector<std::span<double>> parameter_blocks(TmiFlow& tmi);
std::vector<std::span<const double>> parameter_blocks(const TmiGrads& grads);

}  // namespace rootflow::flow
