#include "rootflow/num/adam.hpp"

#include <cmath>
#include <string>

#include "rootflow/error.hpp"

namespace rootflow::num {

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state, double lr,
               const AdamConfig& cfg) {
  if (!(lr > 0.0)) throw ArgumentError("Adam learning rate must be > 0");
  if (params.size() != grads.size()) throw DimensionError("Adam: parameter/gradient block count differ");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size())
      throw DimensionError("Adam: block " + std::to_string(b) + " size mismatch");
    for (double g : grads[b])
      if (!std::isfinite(g)) throw NumericError("Adam: non-finite gradient in block " + std::to_string(b));
  }
  if (state.step_count == 0 && state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    throw DimensionError("Adam state does not match parameter layout");
  for (std::size_t b = 0; b < params.size(); ++b)
    if (state.first_moment[b].size() != params[b].size() ||
        state.second_moment[b].size() != params[b].size())
      throw DimensionError("Adam state does not match parameter layout");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    auto g = grads[b];
    auto& m = state.first_moment[b];
    auto& v = state.second_moment[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

}  // namespace rootflow::num
