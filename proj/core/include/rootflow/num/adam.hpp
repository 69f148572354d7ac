#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rootflow/num/matrix.hpp"

namespace rootflow::num {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

// Moments are shaped lazily on the first step and must match afterwards.
struct AdamState {
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
  std::int64_t step_count = 0;
};

// In-place bias-corrected Adam update (no weight decay). Throws NumericError
// on non-finite gradients before touching any parameter.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

}  // namespace rootflow::num
