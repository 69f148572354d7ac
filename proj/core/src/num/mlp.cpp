#include "rootflow/num/mlp.hpp"

#include <cmath>
#include <string>

#include "rootflow/error.hpp"

namespace rootflow::num {
namespace {

inline double leaky(double a, double slope) { return a > 0.0 ? a : slope * a; }
inline double leaky_grad(double a, double slope) { return a > 0.0 ? 1.0 : slope; }

void affine(const Matrix& w, const Vector& b, std::span<const double> x, Vector& out) {
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  out.resize(rows);
  const double* wd = w.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = wd + r * cols;
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    out[r] = acc;
  }
}

}  // namespace

std::size_t MlpParams::input_size() const {
  if (weights.empty()) throw DimensionError("MLP has no layers");
  return weights.front().cols();
}

std::size_t MlpParams::output_size() const {
  if (weights.empty()) throw DimensionError("MLP has no layers");
  return weights.back().rows();
}

std::size_t MlpParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void MlpParams::validate() const {
  if (weights.empty()) throw DimensionError("MLP has no layers");
  if (weights.size() != biases.size()) throw DimensionError("weights/biases layer count differ");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (biases[l].size() != weights[l].rows())
      throw DimensionError("bias length mismatch at layer " + std::to_string(l));
    if (l > 0 && weights[l].cols() != weights[l - 1].rows())
      throw DimensionError("layer " + std::to_string(l) + " does not compose with its predecessor");
    if (!weights[l].all_finite()) throw NumericError("non-finite weight at layer " + std::to_string(l));
    for (double b : biases[l])
      if (!std::isfinite(b)) throw NumericError("non-finite bias at layer " + std::to_string(l));
  }
  if (!(leaky_slope > 0.0)) throw ArgumentError("leaky_slope must be > 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ArgumentError("dropout_rate must be in [0, 1)");
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z = *this;
  z.set_zero();
  return z;
}

void MlpParams::set_zero() {
  for (auto& w : weights)
    for (double& v : w.data()) v = 0.0;
  for (auto& b : biases)
    for (double& v : b) v = 0.0;
}

MlpParams make_mlp(std::span<const std::size_t> layer_sizes, double leaky_slope,
                   double dropout_rate, RngStream& rng) {
  if (layer_sizes.size() < 2) throw ArgumentError("make_mlp needs at least input and output sizes");
  MlpParams p;
  p.leaky_slope = leaky_slope;
  p.dropout_rate = dropout_rate;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t fan_in = layer_sizes[l];
    const std::size_t fan_out = layer_sizes[l + 1];
    Matrix w(fan_out, fan_in);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(fan_out, 0.0);
  }
  p.validate();
  return p;
}

MlpOutput mlp_forward(const MlpParams& params, std::span<const double> input, Mode mode,
                      RngStream* rng) {
  if (input.size() != params.input_size()) {
    throw DimensionError("MLP input length " + std::to_string(input.size()) + ", expected " +
                         std::to_string(params.input_size()));
  }
  const bool dropout = mode == Mode::train && params.dropout_rate > 0.0;
  if (dropout && rng == nullptr) throw ArgumentError("train-mode dropout requires an RngStream");
  const double keep_scale = 1.0 / (1.0 - params.dropout_rate);

  const std::size_t layers = params.layer_count();
  MlpOutput out;
  auto& cache = out.cache;
  cache.layer_inputs.reserve(layers);
  cache.pre_activations.reserve(layers - 1);
  cache.layer_inputs.emplace_back(input.begin(), input.end());

  for (std::size_t l = 0; l < layers; ++l) {
    Vector z;
    affine(params.weights[l], params.biases[l], cache.layer_inputs.back(), z);
    if (l + 1 == layers) {
      out.output = std::move(z);
      break;
    }
    Vector h(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) h[k] = leaky(z[k], params.leaky_slope);
    if (dropout) {
      Vector mask(z.size());
      for (std::size_t k = 0; k < z.size(); ++k) {
        mask[k] = rng->bernoulli(params.dropout_rate) ? 0.0 : keep_scale;
        h[k] *= mask[k];
      }
      cache.dropout_masks.push_back(std::move(mask));
    }
    cache.pre_activations.push_back(std::move(z));
    cache.layer_inputs.push_back(std::move(h));
  }
  return out;
}

Vector mlp_eval(const MlpParams& params, std::span<const double> input) {
  if (input.size() != params.input_size()) throw DimensionError("MLP input length mismatch");
  Vector cur(input.begin(), input.end());
  Vector next;
  const std::size_t layers = params.layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    affine(params.weights[l], params.biases[l], cur, next);
    if (l + 1 < layers)
      for (double& v : next) v = leaky(v, params.leaky_slope);
    std::swap(cur, next);
  }
  return cur;
}

Vector mlp_backward_accumulate(const MlpParams& params, const MlpCache& cache,
                               std::span<const double> grad_output, MlpParams& grads) {
  const std::size_t layers = params.layer_count();
  if (cache.layer_inputs.size() != layers || cache.pre_activations.size() + 1 != layers ||
      (!cache.dropout_masks.empty() && cache.dropout_masks.size() + 1 != layers)) {
    throw DimensionError("MLP cache does not match parameter layout");
  }
  if (grads.layer_count() != layers) throw DimensionError("gradient accumulator layout mismatch");
  if (grad_output.size() != params.output_size()) throw DimensionError("grad_output length mismatch");

  Vector g(grad_output.begin(), grad_output.end());
  Vector g_in;
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& w = params.weights[l];
    const Vector& x = cache.layer_inputs[l];
    if (x.size() != w.cols()) throw DimensionError("MLP cache does not match parameter layout");
    Matrix& gw = grads.weights[l];
    Vector& gb = grads.biases[l];
    const std::size_t rows = w.rows();
    const std::size_t cols = w.cols();
    g_in.assign(cols, 0.0);
    const double* wd = w.data().data();
    double* gwd = gw.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      gb[r] += gr;
      double* gwr = gwd + r * cols;
      const double* wr = wd + r * cols;
      for (std::size_t c = 0; c < cols; ++c) {
        gwr[c] += gr * x[c];
        g_in[c] += gr * wr[c];
      }
    }
    if (l == 0) break;
    const Vector& pre = cache.pre_activations[l - 1];
    const Vector* mask = cache.dropout_masks.empty() ? nullptr : &cache.dropout_masks[l - 1];
    for (std::size_t k = 0; k < cols; ++k) {
      double v = g_in[k];
      if (mask) v *= (*mask)[k];
      g_in[k] = v * leaky_grad(pre[k], params.leaky_slope);
    }
    std::swap(g, g_in);
  }
  return g_in;
}

MlpGradients mlp_backward(const MlpParams& params, const MlpCache& cache,
                          std::span<const double> grad_output) {
  MlpGradients out{params.zeros_like(), {}};
  out.input_grad = mlp_backward_accumulate(params, cache, grad_output, out.param_grads);
  return out;
}

std::vector<std::span<double>> parameter_blocks(MlpParams& params) {
  std::vector<std::span<double>> blocks;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    blocks.emplace_back(params.weights[l].data());
    blocks.emplace_back(params.biases[l]);
  }
  return blocks;
}

std::vector<std::span<const double>> parameter_blocks(const MlpParams& params) {
  std::vector<std::span<const double>> blocks;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    blocks.emplace_back(params.weights[l].data());
    blocks.emplace_back(params.biases[l]);
  }
  return blocks;
}

}  // namespace rootflow::num
