#include "rootflow/flow/conditional_flow.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "rootflow/error.hpp"
#include "rootflow/num/adam.hpp"

namespace rootflow::flow {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

void FlowConfig::validate() const {
  if (n_layers < 1) throw ArgumentError("flow needs at least one layer");
  if (spline.bins < 2) throw ArgumentError("spline needs at least 2 bins");
  if (!(spline.bound > 0.0)) throw ArgumentError("spline bound must be > 0");
  if (hidden_units < 1) throw ArgumentError("conditioner needs hidden units");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ArgumentError("dropout must be in [0, 1)");
  if (!(leaky_slope > 0.0)) throw ArgumentError("leaky_slope must be > 0");
}

ConditionalFlow make_flow(const FlowConfig& cfg, num::RngStream& rng) {
  cfg.validate();
  ConditionalFlow flow{cfg, {}};
  std::vector<std::size_t> sizes{cfg.cond_dim};
  for (std::size_t h = 0; h < cfg.hidden_layers; ++h) sizes.push_back(cfg.hidden_units);
  sizes.push_back(cfg.spline.raw_size());
  const auto identity = identity_spline_raw(cfg.spline);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    auto mlp = num::make_mlp(sizes, cfg.leaky_slope, cfg.dropout, rng);
    for (double& w : mlp.weights.back().data()) w = 0.0;
    mlp.biases.back() = identity;
    flow.conditioners.push_back(std::move(mlp));
  }
  return flow;
}

FlowGrads zero_grads(const ConditionalFlow& flow) {
  FlowGrads g;
  g.reserve(flow.conditioners.size());
  for (const auto& c : flow.conditioners) g.push_back(c.zeros_like());
  return g;
}

FlowEval flow_transform(const ConditionalFlow& flow, double x, std::span<const double> cond,
                        Mode mode, num::RngStream* rng) {
  if (cond.size() != flow.cond_dim())
    throw DimensionError("flow expects " + std::to_string(flow.cond_dim()) +
                         " conditioning values, got " + std::to_string(cond.size()));
  const std::size_t layers = flow.conditioners.size();
  FlowEval ev;
  ev.cache.conditioner.reserve(layers);
  ev.cache.raw.reserve(layers);
  ev.cache.layer_input.reserve(layers);
  double cur = x;
  for (std::size_t l = 0; l < layers; ++l) {
    auto out = num::mlp_forward(flow.conditioners[l], cond, mode, rng);
    const SplineValue sv = rq_spline_forward(flow.config.spline, out.output, cur);
    ev.cache.layer_input.push_back(cur);
    ev.cache.raw.push_back(std::move(out.output));
    ev.cache.conditioner.push_back(std::move(out.cache));
    cur = sv.y;
    ev.logdet += sv.log_abs_deriv;
  }
  ev.u = cur;
  return ev;
}

SplineValue flow_eval(const ConditionalFlow& flow, double x, std::span<const double> cond) {
  if (cond.size() != flow.cond_dim()) throw DimensionError("flow conditioning length mismatch");
  SplineValue acc{x, 0.0};
  for (const auto& c : flow.conditioners) {
    const auto raw = num::mlp_eval(c, cond);
    const SplineValue sv = rq_spline_forward(flow.config.spline, raw, acc.y);
    acc.y = sv.y;
    acc.log_abs_deriv += sv.log_abs_deriv;
  }
  return acc;
}

double flow_inverse(const ConditionalFlow& flow, double u, std::span<const double> cond) {
  if (cond.size() != flow.cond_dim()) throw DimensionError("flow conditioning length mismatch");
  double cur = u;
  for (std::size_t l = flow.conditioners.size(); l-- > 0;) {
    const auto raw = num::mlp_eval(flow.conditioners[l], cond);
    cur = rq_spline_inverse(flow.config.spline, raw, cur);
  }
  return cur;
}

FlowInputGrad flow_backward(const ConditionalFlow& flow, const FlowEval& eval, double grad_u,
                            double grad_logdet, FlowGrads& grads) {
  const std::size_t layers = flow.conditioners.size();
  if (eval.cache.raw.size() != layers || grads.size() != layers)
    throw DimensionError("flow cache/gradient layout mismatch");
  FlowInputGrad out;
  out.cond.assign(flow.cond_dim(), 0.0);
  thread_local std::vector<double> raw_grad;
  double g_x = grad_u;
  for (std::size_t l = layers; l-- > 0;) {
    raw_grad.assign(flow.config.spline.raw_size(), 0.0);
    g_x = rq_spline_backward(flow.config.spline, eval.cache.raw[l], eval.cache.layer_input[l], g_x,
                             grad_logdet, raw_grad);
    const auto g_cond = num::mlp_backward_accumulate(flow.conditioners[l], eval.cache.conditioner[l],
                                                     raw_grad, grads[l]);
    for (std::size_t j = 0; j < g_cond.size(); ++j) out.cond[j] += g_cond[j];
  }
  out.x = g_x;
  return out;
}

std::vector<std::span<double>> parameter_blocks(ConditionalFlow& flow) {
  std::vector<std::span<double>> blocks;
  for (auto& c : flow.conditioners) {
    auto b = num::parameter_blocks(c);
    blocks.insert(blocks.end(), b.begin(), b.end());
  }
  return blocks;
}

std::vector<std::span<const double>> parameter_blocks(const FlowGrads& grads) {
  std::vector<std::span<const double>> blocks;
  for (const auto& g : grads) {
    auto b = num::parameter_blocks(g);
    blocks.insert(blocks.end(), b.begin(), b.end());
  }
  return blocks;
}

void FlowData::validate() const {
  if (x.empty()) throw ArgumentError("flow training data is empty");
  if (cond.rows() != x.size()) throw DimensionError("flow data: x and cond row counts differ");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ArgumentError("learning rate must be > 0");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  flow_config(0).validate();
}

FlowConfig TrainConfig::flow_config(std::size_t cond_dim) const {
  FlowConfig f;
  f.cond_dim = cond_dim;
  f.n_layers = n_layers;
  f.spline = spline;
  f.hidden_units = hidden_units;
  f.hidden_layers = hidden_layers;
  f.dropout = dropout;
  f.leaky_slope = leaky_slope;
  return f;
}

double nll_loss(const ConditionalFlow& flow, const FlowData& data,
                std::span<const std::size_t> batch, Mode mode, num::RngStream* rng) {
  if (batch.empty()) throw ArgumentError("nll_loss on an empty batch");
  double total = 0.0;
  for (std::size_t r : batch) {
    double u, logdet;
    if (mode == Mode::eval) {
      const auto sv = flow_eval(flow, data.x[r], data.cond.row(r));
      u = sv.y;
      logdet = sv.log_abs_deriv;
    } else {
      const auto ev = flow_transform(flow, data.x[r], data.cond.row(r), mode, rng);
      u = ev.u;
      logdet = ev.logdet;
    }
    total += 0.5 * u * u + kHalfLog2Pi - logdet;
  }
  const double loss = total / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) throw NumericError("non-finite NLL");
  return loss;
}

double nll_loss_and_grad(const ConditionalFlow& flow, const FlowData& data,
                         std::span<const std::size_t> batch, Mode mode, num::RngStream* rng,
                         FlowGrads& grads) {
  if (batch.empty()) throw ArgumentError("nll_loss on an empty batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (std::size_t r : batch) {
    const auto ev = flow_transform(flow, data.x[r], data.cond.row(r), mode, rng);
    total += 0.5 * ev.u * ev.u + kHalfLog2Pi - ev.logdet;
    flow_backward(flow, ev, ev.u * inv_n, -inv_n, grads);
  }
  return total * inv_n;
}

ConditionalFlow train_flow(const FlowData& data, const TrainConfig& cfg, num::RngStream& rng) {
  cfg.validate();
  data.validate();
  auto init_rng = rng.derive(0);
  auto shuffle_rng = rng.derive(1);
  auto dropout_rng = rng.derive(2);
  ConditionalFlow flow = make_flow(cfg.flow_config(data.cond.cols()), init_rng);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  num::AdamState adam;
  FlowGrads grads = zero_grads(flow);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      for (auto& g : grads) g.set_zero();
      const double loss = nll_loss_and_grad(flow, data, batch, Mode::train, &dropout_rng, grads);
      if (!std::isfinite(loss))
        throw TrainingError(step, "non-finite training loss at step " + std::to_string(step));
      try {
        num::adam_step(parameter_blocks(flow), parameter_blocks(grads), adam, cfg.lr);
      } catch (const NumericError& e) {
        throw TrainingError(step, std::string("non-finite gradient at step ") +
                                      std::to_string(step) + ": " + e.what());
      }
    }
  }
  return flow;
}

num::Vector input_jacobian(const ConditionalFlow& flow, double x, std::span<const double> cond,
                           double h) {
  if (cond.size() != flow.cond_dim()) throw DimensionError("flow conditioning length mismatch");
  num::Vector probe(cond.begin(), cond.end());
  num::Vector jac(cond.size());
  for (std::size_t j = 0; j < cond.size(); ++j) {
    probe[j] = cond[j] + h;
    const double up = flow_eval(flow, x, probe).y;
    probe[j] = cond[j] - h;
    const double down = flow_eval(flow, x, probe).y;
    probe[j] = cond[j];
    jac[j] = (up - down) / (2.0 * h);
  }
  return jac;
}

num::Vector input_gradient(const ConditionalFlow& flow, double x, std::span<const double> cond) {
  const auto ev = flow_transform(flow, x, cond, Mode::eval);
  auto grads = zero_grads(flow);
  return flow_backward(flow, ev, 1.0, 0.0, grads).cond;
}

}  // namespace rootflow::flow
