#include "rootflow/flow/tmi.hpp"

#include <string>

#include "rootflow/error.hpp"

namespace rootflow::flow {

TmiFlow make_tmi(std::size_t d, const TrainConfig& cfg, num::RngStream& rng) {
  cfg.validate();
  TmiFlow tmi;
  for (std::size_t j = 0; j < d; ++j) {
    auto sub = rng.derive(j);
    tmi.coord_flows.push_back(make_flow(cfg.flow_config(j), sub));
  }
  return tmi;
}

TmiGrads zero_grads(const TmiFlow& tmi) {
  TmiGrads g;
  g.reserve(tmi.dim());
  for (const auto& f : tmi.coord_flows) g.push_back(zero_grads(f));
  return g;
}

TmiEval tmi_forward(const TmiFlow& tmi, std::span<const double> x, Mode mode,
                    num::RngStream* rng) {
  if (x.size() != tmi.dim())
    throw DimensionError("TMI map expects " + std::to_string(tmi.dim()) + " inputs, got " +
                         std::to_string(x.size()));
  TmiEval ev;
  ev.u.resize(x.size());
  ev.coords.reserve(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    auto fe = flow_transform(tmi.coord_flows[j], x[j], x.subspan(0, j), mode, rng);
    ev.u[j] = fe.u;
    ev.logdet += fe.logdet;
    ev.coords.push_back(std::move(fe));
  }
  return ev;
}

num::Vector tmi_map(const TmiFlow& tmi, std::span<const double> x) {
  if (x.size() != tmi.dim()) throw DimensionError("TMI input length mismatch");
  num::Vector u(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) u[j] = flow_eval(tmi.coord_flows[j], x[j], x.subspan(0, j)).y;
  return u;
}

num::Vector tmi_backward(const TmiFlow& tmi, const TmiEval& eval, std::span<const double> grad_u,
                         double grad_logdet, TmiGrads& grads) {
  const std::size_t d = tmi.dim();
  if (grad_u.size() != d || eval.coords.size() != d || grads.size() != d)
    throw DimensionError("TMI backward layout mismatch");
  num::Vector gx(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const auto g = flow_backward(tmi.coord_flows[j], eval.coords[j], grad_u[j], grad_logdet, grads[j]);
    gx[j] += g.x;
    for (std::size_t k = 0; k < j; ++k) gx[k] += g.cond[k];
  }
  return gx;
}

num::Matrix tmi_jacobian(const TmiFlow& tmi, std::span<const double> x, double h) {
  const std::size_t d = tmi.dim();
  if (x.size() != d) throw DimensionError("TMI input length mismatch");
  num::Matrix jac(d, d);
  num::Vector probe(x.begin(), x.end());
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t j = k; j < d; ++j) {
      const auto& f = tmi.coord_flows[j];
      const std::span<const double> p(probe);
      probe[k] = x[k] + h;
      const double up = flow_eval(f, p[j], p.subspan(0, j)).y;
      probe[k] = x[k] - h;
      const double down = flow_eval(f, p[j], p.subspan(0, j)).y;
      probe[k] = x[k];
      jac(j, k) = (up - down) / (2.0 * h);
    }
  }
  return jac;
}

std::vector<std::span<double>> parameter_blocks(TmiFlow& tmi) {
  std::vector<std::span<double>> blocks;
  for (auto& f : tmi.coord_flows) {
    auto b = parameter_blocks(f);
    blocks.insert(blocks.end(), b.begin(), b.end());
  }
  return blocks;
}

std::vector<std::span<const double>> parameter_blocks(const TmiGrads& grads) {
  std::vector<std::span<const double>> blocks;
  for (const auto& g : grads) {
    auto b = parameter_blocks(g);
    blocks.insert(blocks.end(), b.begin(), b.end());
  }
  return blocks;
}

}  // namespace rootflow::flow
