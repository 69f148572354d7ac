#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rootflow/flow/spline.hpp"
#include "rootflow/num/matrix.hpp"
#include "rootflow/num/mlp.hpp"
#include "rootflow/num/rng.hpp"

namespace rootflow::flow {

using num::Mode;

// Architecture of a one-dimensional conditional spline flow.
struct FlowConfig {
  std::size_t cond_dim = 0;
  std::size_t n_layers = 1;
  SplineShape spline{};
  std::size_t hidden_units = 128;
  std::size_t hidden_layers = 1;
  double dropout = 0.1;
  double leaky_slope = 0.01;

  void validate() const;
};

// x -> u as a stack of spline layers; layer l's spline parameters are
// conditioners[l](cond). Strictly increasing in x for every cond.
struct ConditionalFlow {
  FlowConfig config;
  std::vector<num::MlpParams> conditioners;

  std::size_t cond_dim() const noexcept { return config.cond_dim; }
};

// Per-layer conditioner gradients, shaped like ConditionalFlow::conditioners.
using FlowGrads = std::vector<num::MlpParams>;

struct FlowCache {
  std::vector<num::MlpCache> conditioner;
  std::vector<num::Vector> raw;
  std::vector<double> layer_input;
};

struct FlowEval {
  double u = 0.0;
  double logdet = 0.0;
  FlowCache cache;
};

struct FlowInputGrad {
  double x = 0.0;
  num::Vector cond;
};

// Hidden conditioner layers get Xavier weights; the output layer is zero with
// biases at identity_spline_raw, so a fresh flow is exactly the identity.
ConditionalFlow make_flow(const FlowConfig& cfg, num::RngStream& rng);

FlowGrads zero_grads(const ConditionalFlow& flow);

FlowEval flow_transform(const ConditionalFlow& flow, double x, std::span<const double> cond,
                        Mode mode, num::RngStream* rng = nullptr);

// Eval-mode (u, logdet) without caches.
SplineValue flow_eval(const ConditionalFlow& flow, double x, std::span<const double> cond);

// Inverse of the eval-mode map in x for fixed cond.
double flow_inverse(const ConditionalFlow& flow, double u, std::span<const double> cond);

// Accumulates dLoss/dparams given dLoss/du and dLoss/dlogdet; returns input
// gradients. `eval` must come from flow_transform on the same flow.
FlowInputGrad flow_backward(const ConditionalFlow& flow, const FlowEval& eval, double grad_u,
                            double grad_logdet, FlowGrads& grads);

std::vector<std::span<double>> parameter_blocks(ConditionalFlow& flow);
std::vector<std::span<const double>> parameter_blocks(const FlowGrads& grads);

// ---------------------------------------------------------------------------
// Maximum-likelihood training under a standard normal base.

// Training samples: x[r] is the transformed variable, cond.row(r) its
// conditioning vector.
struct FlowData {
  num::Vector x;
  num::Matrix cond;

  std::size_t size() const noexcept { return x.size(); }
  void validate() const;
};

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::size_t n_layers = 1;
  SplineShape spline{};
  std::size_t hidden_units = 128;
  std::size_t hidden_layers = 1;
  double dropout = 0.1;
  double leaky_slope = 0.01;

  void validate() const;
  FlowConfig flow_config(std::size_t cond_dim) const;
};

// Mean over the batch of -(log phi(u) + logdet).
double nll_loss(const ConditionalFlow& flow, const FlowData& data,
                std::span<const std::size_t> batch, Mode mode, num::RngStream* rng = nullptr);

// Same loss; also accumulates its parameter gradient into `grads`.
double nll_loss_and_grad(const ConditionalFlow& flow, const FlowData& data,
                         std::span<const std::size_t> batch, Mode mode, num::RngStream* rng,
                         FlowGrads& grads);

// Near-identity init, then epochs x shuffled minibatches (final short batch
// kept) of Adam on the train-mode NLL. Throws TrainingError(step) on a
// non-finite loss.
ConditionalFlow train_flow(const FlowData& data, const TrainConfig& cfg, num::RngStream& rng);

// dT(x | cond) / dcond_j by central differences with step h, eval mode.
num::Vector input_jacobian(const ConditionalFlow& flow, double x, std::span<const double> cond,
                           double h = 1e-4);

// Same quantity by reverse mode through conditioner and spline.
num::Vector input_gradient(const ConditionalFlow& flow, double x, std::span<const double> cond);

}  // namespace rootflow::flow
