#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rootflow/num/matrix.hpp"
#include "rootflow/num/rng.hpp"

namespace rootflow::num {

enum class Mode { train, eval };

// Fully connected network: affine layers with leaky-ReLU (and dropout in
// train mode) on every hidden layer, linear output layer.
// weights[l] has shape (out_l, in_l).
struct MlpParams {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  double leaky_slope = 0.01;
  double dropout_rate = 0.0;

  std::size_t layer_count() const noexcept { return weights.size(); }
  std::size_t input_size() const;
  std::size_t output_size() const;
  std::size_t parameter_count() const noexcept;

  // Throws DimensionError / ArgumentError / NumericError.
  void validate() const;
  MlpParams zeros_like() const;
  void set_zero();
};

struct MlpCache {
  std::vector<Vector> layer_inputs;
  std::vector<Vector> pre_activations;
  // Inverted-dropout multipliers (0 or 1/(1-p)) per hidden layer; empty when
  // no dropout was applied.
  std::vector<Vector> dropout_masks;
};

struct MlpOutput {
  Vector output;
  MlpCache cache;
};

struct MlpGradients {
  MlpParams param_grads;
  Vector input_grad;
};

// Xavier-uniform weights, zero biases. layer_sizes = {in, hidden..., out}.
MlpParams make_mlp(std::span<const std::size_t> layer_sizes, double leaky_slope,
                   double dropout_rate, RngStream& rng);

// `rng` is required in train mode when dropout_rate > 0, ignored otherwise.
MlpOutput mlp_forward(const MlpParams& params, std::span<const double> input, Mode mode,
                      RngStream* rng = nullptr);

// Eval-mode forward without building a cache.
Vector mlp_eval(const MlpParams& params, std::span<const double> input);

MlpGradients mlp_backward(const MlpParams& params, const MlpCache& cache,
                          std::span<const double> grad_output);

// Adds parameter gradients into `grads` (shaped like params) and returns the
// gradient with respect to the input.
Vector mlp_backward_accumulate(const MlpParams& params, const MlpCache& cache,
                               std::span<const double> grad_output, MlpParams& grads);

// Flat views over every weight and bias block, in a fixed order.
std::vector<std::span<double>> parameter_blocks(MlpParams& params);
std::vector<std::span<const double>> parameter_blocks(const MlpParams& params);

}  // namespace rootflow::num
