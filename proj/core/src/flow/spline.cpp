#include "rootflow/flow/spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rootflow/error.hpp"

namespace rootflow::flow {
namespace {

double softplus(double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); }
double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Activated knots. Vectors live in thread-local scratch to avoid per-call
// allocation in training loops.
struct Knots {
  std::vector<double> wsoft;   // softmax of raw widths
  std::vector<double> hsoft;   // softmax of raw heights
  std::vector<double> cx;      // bins + 1 knot x positions
  std::vector<double> cy;      // bins + 1 knot y positions
  std::vector<double> deriv;   // bins + 1 knot derivatives
};

void softmax(std::span<const double> in, std::vector<double>& out) {
  out.resize(in.size());
  const double mx = *std::max_element(in.begin(), in.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    out[k] = std::exp(in[k] - mx);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
}

void cumulative(const std::vector<double>& soft, double min_size, double bound,
                std::vector<double>& knots) {
  const std::size_t k = soft.size();
  const double scale = 1.0 - min_size * static_cast<double>(k);
  knots.resize(k + 1);
  knots[0] = -bound;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    acc += min_size + scale * soft[i];
    knots[i + 1] = -bound + 2.0 * bound * acc;
  }
  knots[k] = bound;
}

const Knots& activate(const SplineShape& shape, std::span<const double> raw) {
  thread_local Knots kn;
  const std::size_t k = shape.bins;
  if (raw.size() != shape.raw_size())
    throw DimensionError("spline expects " + std::to_string(shape.raw_size()) +
                         " raw values, got " + std::to_string(raw.size()));
  for (double v : raw)
    if (!std::isfinite(v)) throw NumericError("non-finite raw spline parameter");
  softmax(raw.subspan(0, k), kn.wsoft);
  softmax(raw.subspan(k, k), kn.hsoft);
  cumulative(kn.wsoft, kMinBinWidth, shape.bound, kn.cx);
  cumulative(kn.hsoft, kMinBinHeight, shape.bound, kn.cy);
  kn.deriv.assign(k + 1, 1.0);
  for (std::size_t i = 1; i < k; ++i) kn.deriv[i] = kMinDerivative + softplus(raw[2 * k + i - 1]);
  return kn;
}

std::size_t find_bin(const std::vector<double>& knots, double v) {
  const auto it = std::upper_bound(knots.begin(), knots.end(), v);
  const std::ptrdiff_t idx = (it - knots.begin()) - 1;
  return static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(knots.size()) - 2));
}

bool inside(const SplineShape& shape, double v) { return v >= -shape.bound && v <= shape.bound; }

// Bin-local quantities shared by forward and backward.
struct BinEval {
  std::size_t bin;
  double xk, wk, yk, hk, dk, dk1;
  double theta, s, omega, den, num, q;
};

BinEval eval_bin(const Knots& kn, double x) {
  BinEval e{};
  e.bin = find_bin(kn.cx, x);
  e.xk = kn.cx[e.bin];
  e.wk = kn.cx[e.bin + 1] - e.xk;
  e.yk = kn.cy[e.bin];
  e.hk = kn.cy[e.bin + 1] - e.yk;
  e.dk = kn.deriv[e.bin];
  e.dk1 = kn.deriv[e.bin + 1];
  e.theta = std::clamp((x - e.xk) / e.wk, 0.0, 1.0);
  e.s = e.hk / e.wk;
  e.omega = e.theta * (1.0 - e.theta);
  e.num = e.hk * (e.s * e.theta * e.theta + e.dk * e.omega);
  e.den = e.s + (e.dk + e.dk1 - 2.0 * e.s) * e.omega;
  const double one_minus = 1.0 - e.theta;
  e.q = e.dk1 * e.theta * e.theta + 2.0 * e.s * e.omega + e.dk * one_minus * one_minus;
  return e;
}

}  // namespace

SplineValue rq_spline_forward(const SplineShape& shape, std::span<const double> raw, double x) {
  if (!std::isfinite(x)) throw NumericError("non-finite spline input");
  const Knots& kn = activate(shape, raw);
  if (!inside(shape, x)) return {x, 0.0};
  const BinEval e = eval_bin(kn, x);
  const double y = e.yk + e.num / e.den;
  const double log_deriv = 2.0 * std::log(e.s) + std::log(e.q) - 2.0 * std::log(e.den);
  return {y, log_deriv};
}

double rq_spline_inverse(const SplineShape& shape, std::span<const double> raw, double y) {
  if (!std::isfinite(y)) throw NumericError("non-finite spline inverse input");
  const Knots& kn = activate(shape, raw);
  if (!inside(shape, y)) return y;
  const std::size_t b = find_bin(kn.cy, y);
  const double xk = kn.cx[b];
  const double wk = kn.cx[b + 1] - xk;
  const double yk = kn.cy[b];
  const double hk = kn.cy[b + 1] - yk;
  const double dk = kn.deriv[b];
  const double dk1 = kn.deriv[b + 1];
  const double s = hk / wk;
  const double dy = y - yk;
  const double mix = dk + dk1 - 2.0 * s;
  const double a = hk * (s - dk) + dy * mix;
  const double bq = hk * dk - dy * mix;
  const double c = -s * dy;
  const double disc = std::max(0.0, bq * bq - 4.0 * a * c);
  double theta = (2.0 * c) / (-bq - std::sqrt(disc));
  theta = std::clamp(theta, 0.0, 1.0);
  // One Newton step on the bin-local map tightens the round trip.
  const double omega = theta * (1.0 - theta);
  const double den = s + mix * omega;
  const double fy = hk * (s * theta * theta + dk * omega) / den - dy;
  const double om = 1.0 - theta;
  const double slope = s * s * (dk1 * theta * theta + 2.0 * s * omega + dk * om * om) /
                       (den * den) * wk;  // d(local y)/d(theta)
  if (slope > 0.0 && std::isfinite(fy)) theta = std::clamp(theta - fy / slope, 0.0, 1.0);
  return xk + theta * wk;
}

double rq_spline_backward(const SplineShape& shape, std::span<const double> raw, double x,
                          double grad_y, double grad_log, std::span<double> raw_grad) {
  if (raw_grad.size() != shape.raw_size()) throw DimensionError("spline raw_grad size mismatch");
  const Knots& kn = activate(shape, raw);
  if (!inside(shape, x)) return grad_y;
  const std::size_t k = shape.bins;
  const BinEval e = eval_bin(kn, x);
  const double theta = e.theta, s = e.s, omega = e.omega, den = e.den, q = e.q;
  const double hk = e.hk, dk = e.dk, dk1 = e.dk1, wk = e.wk;
  const double r = e.num / den;
  const double mix = dk + dk1 - 2.0 * s;
  const double one_minus = 1.0 - theta;

  // Partials of r = num / den (y = yk + r) holding (theta, s, hk, dk, dk1).
  const double r_theta = (hk * (2.0 * s * theta + dk * (1.0 - 2.0 * theta)) -
                          r * mix * (1.0 - 2.0 * theta)) / den;
  const double r_s = (hk * theta * theta - r * (1.0 - 2.0 * omega)) / den;
  const double r_hk = (s * theta * theta + dk * omega) / den;
  const double r_dk = (hk * omega - r * omega) / den;
  const double r_dk1 = -r * omega / den;

  // Partials of log deriv = 2 log s + log q - 2 log den.
  const double l_theta = (2.0 * dk1 * theta + 2.0 * s * (1.0 - 2.0 * theta) -
                          2.0 * dk * one_minus) / q -
                         2.0 * mix * (1.0 - 2.0 * theta) / den;
  const double l_s = 2.0 / s + 2.0 * omega / q - 2.0 * (1.0 - 2.0 * omega) / den;
  const double l_dk = one_minus * one_minus / q - 2.0 * omega / den;
  const double l_dk1 = theta * theta / q - 2.0 * omega / den;

  const double g_theta = grad_y * r_theta + grad_log * l_theta;
  const double g_s = grad_y * r_s + grad_log * l_s;
  const double g_hk_explicit = grad_y * r_hk;
  const double g_dk = grad_y * r_dk + grad_log * l_dk;
  const double g_dk1 = grad_y * r_dk1 + grad_log * l_dk1;

  // theta = (x - xk) / wk, s = hk / wk, wk = xk1 - xk, hk = yk1 - yk.
  const double g_wk = -g_theta * theta / wk - g_s * s / wk;
  const double g_hk = g_hk_explicit + g_s / wk;
  const double g_xk = -g_theta / wk - g_wk;
  const double g_xk1 = g_wk;
  const double g_yk = grad_y - g_hk;
  const double g_yk1 = g_hk;
  const double g_x = g_theta / wk;

  // Knot i (0 < i < bins) = -B + 2B * sum_{m<i} (min + scale * soft_m).
  auto knots_to_raw = [&](std::size_t b, double g_lo, double g_hi, double min_size,
                          const std::vector<double>& soft, std::span<double> out) {
    const double scale = 2.0 * shape.bound * (1.0 - min_size * static_cast<double>(k));
    thread_local std::vector<double> g_soft;
    g_soft.assign(k, 0.0);
    if (b > 0)
      for (std::size_t m = 0; m < b; ++m) g_soft[m] += scale * g_lo;
    if (b + 1 < k)
      for (std::size_t m = 0; m <= b; ++m) g_soft[m] += scale * g_hi;
    double dot = 0.0;
    for (std::size_t m = 0; m < k; ++m) dot += soft[m] * g_soft[m];
    for (std::size_t m = 0; m < k; ++m) out[m] += soft[m] * (g_soft[m] - dot);
  };
  knots_to_raw(e.bin, g_xk, g_xk1, kMinBinWidth, kn.wsoft, raw_grad.subspan(0, k));
  knots_to_raw(e.bin, g_yk, g_yk1, kMinBinHeight, kn.hsoft, raw_grad.subspan(k, k));

  // Interior derivative i uses raw[2k + i - 1].
  if (e.bin > 0) raw_grad[2 * k + e.bin - 1] += g_dk * sigmoid(raw[2 * k + e.bin - 1]);
  if (e.bin + 1 < k) raw_grad[2 * k + e.bin] += g_dk1 * sigmoid(raw[2 * k + e.bin]);
  return g_x;
}

std::vector<double> identity_spline_raw(const SplineShape& shape) {
  std::vector<double> raw(shape.raw_size(), 0.0);
  // softplus(v) = 1 - kMinDerivative.
  const double target = 1.0 - kMinDerivative;
  const double v = std::log(std::expm1(target));
  for (std::size_t i = 2 * shape.bins; i < raw.size(); ++i) raw[i] = v;
  return raw;
}

}  // namespace rootflow::flow
