#include "rootflow/perm/sinkhorn.hpp"

#include <algorithm>
#include <cmath>

#include "rootflow/error.hpp"

namespace rootflow::perm {
namespace {

template <typename Get>
double log_sum_exp(std::size_t n, Get get) {
  double mx = -INFINITY;
  for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, get(k));
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(get(k) - mx);
  return mx + std::log(s);
}

}  // namespace

num::Matrix sinkhorn(const num::Matrix& logits, double t, std::size_t iters) {
  if (logits.rows() != logits.cols()) throw DimensionError("sinkhorn needs a square matrix");
  if (!(t > 0.0)) throw ArgumentError("sinkhorn temperature must be > 0");
  if (iters < 1) throw ArgumentError("sinkhorn needs at least one iteration");
  if (!logits.all_finite()) throw NumericError("sinkhorn: non-finite logits");
  const std::size_t d = logits.rows();
  num::Matrix la(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) la(i, j) = logits(i, j) / t;
  for (std::size_t it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < d; ++i) {
      const double z = log_sum_exp(d, [&](std::size_t j) { return la(i, j); });
      for (std::size_t j = 0; j < d; ++j) la(i, j) -= z;
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double z = log_sum_exp(d, [&](std::size_t i) { return la(i, j); });
      for (std::size_t i = 0; i < d; ++i) la(i, j) -= z;
    }
  }
  for (double& v : la.data()) v = std::exp(v);
  return la;
}

num::Matrix gumbel_perturb(const num::Matrix& logits, num::RngStream& rng) {
  num::Matrix out = logits;
  for (double& v : out.data()) v += rng.gumbel();
  return out;
}

}  // namespace rootflow::perm
