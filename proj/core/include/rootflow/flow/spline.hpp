#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rootflow::flow {

// Monotone rational-quadratic spline on [-bound, bound] with identity tails.
//
// Raw parameter layout (3 * bins - 1 values):
//   [0, bins)            unnormalized bin widths   (softmax)
//   [bins, 2 * bins)     unnormalized bin heights  (softmax)
//   [2 * bins, 3*bins-1) interior knot derivatives (softplus)
// Boundary derivatives are fixed to 1 so the map is C1 at +-bound.
struct SplineShape {
  std::size_t bins = 8;
  double bound = 3.0;

  std::size_t raw_size() const noexcept { return 3 * bins - 1; }
};

inline constexpr double kMinBinWidth = 1e-3;
inline constexpr double kMinBinHeight = 1e-3;
inline constexpr double kMinDerivative = 1e-3;

struct SplineValue {
  double y;
  double log_abs_deriv;
};

// Throws NumericError on non-finite raw values or x.
SplineValue rq_spline_forward(const SplineShape& shape, std::span<const double> raw, double x);

// Inverse of rq_spline_forward in y.
double rq_spline_inverse(const SplineShape& shape, std::span<const double> raw, double y);

// Reverse-mode pass for a scalar loss with dLoss/dy = grad_y and
// dLoss/dlog_abs_deriv = grad_log. Adds dLoss/draw into raw_grad and returns
// dLoss/dx.
double rq_spline_backward(const SplineShape& shape, std::span<const double> raw, double x,
                          double grad_y, double grad_log, std::span<double> raw_grad);

// Raw values whose activated spline is exactly the identity on [-bound, bound].
std::vector<double> identity_spline_raw(const SplineShape& shape);

}  // namespace rootflow::flow
