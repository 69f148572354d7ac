#include "rootflow/perm/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rootflow/error.hpp"

namespace rootflow::perm {
namespace {

struct Solution {
  std::vector<std::size_t> sigma;  // row -> column
  std::vector<double> u, v;        // optimal duals, cost(i, j) >= u[i] + v[j]
};

// Minimum-cost assignment, potentials formulation (1-based internally).
Solution min_cost_assignment(const num::Matrix& cost) {
  const std::size_t n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Solution s;
  s.sigma.resize(n);
  for (std::size_t j = 1; j <= n; ++j) s.sigma[p[j] - 1] = j - 1;
  s.u.assign(u.begin() + 1, u.end());
  s.v.assign(v.begin() + 1, v.end());
  return s;
}

num::Matrix negated(const num::Matrix& score) {
  num::Matrix cost(score.rows(), score.cols());
  for (std::size_t i = 0; i < score.rows(); ++i)
    for (std::size_t j = 0; j < score.cols(); ++j) cost(i, j) = -score(i, j);
  return cost;
}

void check_input(const num::Matrix& score) {
  if (score.rows() != score.cols()) throw DimensionError("assignment needs a square matrix");
  if (!score.all_finite()) throw NumericError("assignment: non-finite score");
}

// Perfect matching on the tight edges, edited in place so that rows can be
// fixed one at a time.
class TightMatching {
 public:
  TightMatching(const num::Matrix& cost, const Solution& s, double tol)
      : n_(cost.rows()), tight_(n_ * n_), row_(s.sigma), col_(n_), fixed_col_(n_, 0) {
    for (std::size_t i = 0; i < n_; ++i) {
      col_[row_[i]] = i;
      for (std::size_t j = 0; j < n_; ++j) tight_[i * n_ + j] = cost(i, j) - s.u[i] - s.v[j] <= tol;
    }
    for (std::size_t i = 0; i < n_; ++i) tight_[i * n_ + row_[i]] = 1;
  }

  // Rematches row r to column c if some perfect tight matching that keeps the
  // already fixed rows contains (r, c); then fixes r.
  bool try_fix(std::size_t r, std::size_t c) {
    if (fixed_col_[c] || !tight_[r * n_ + c]) return false;
    if (row_[r] != c) {
      const std::size_t freed = row_[r];
      visited_.assign(n_, 0);
      visited_[c] = 1;
      if (!augment(col_[c], freed)) return false;
      row_[r] = c;
      col_[c] = r;
    }
    fixed_col_[c] = 1;
    return true;
  }

  const std::vector<std::size_t>& sigma() const { return row_; }

 private:
  // Alternating path from row x to column target over unfixed tight edges.
  bool augment(std::size_t x, std::size_t target) {
    for (std::size_t y = 0; y < n_; ++y) {
      if (visited_[y] || fixed_col_[y] || !tight_[x * n_ + y]) continue;
      visited_[y] = 1;
      if (y == target || augment(col_[y], target)) {
        row_[x] = y;
        col_[y] = x;
        return true;
      }
    }
    return false;
  }

  std::size_t n_;
  std::vector<char> tight_;
  std::vector<std::size_t> row_, col_;
  std::vector<char> fixed_col_, visited_;
};

}  // namespace

double max_assignment_value(const num::Matrix& score) {
  check_input(score);
  const std::size_t n = score.rows();
  if (n == 0) return 0.0;
  const auto s = min_cost_assignment(negated(score));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += score(i, s.sigma[i]);
  return total;
}

Assignment hungarian(const num::Matrix& score) {
  check_input(score);
  const std::size_t n = score.rows();
  Assignment out;
  if (n == 0) return out;
  const auto cost = negated(score);
  const auto s = min_cost_assignment(cost);
  double scale = 1.0;
  for (double v : score.data()) scale = std::max(scale, std::abs(v));
  const double tol = 1e-9 * scale * static_cast<double>(n);

  // Every optimal assignment uses only edges that are tight under the optimal
  // duals; fix rows in order to the smallest column that keeps a perfect
  // tight matching.
  TightMatching m(cost, s, tol);
  for (std::size_t r = 0; r < n; ++r) {
    bool placed = false;
    for (std::size_t c = 0; c < n && !placed; ++c) placed = m.try_fix(r, c);
    if (!placed) throw Error("hungarian: failed to reconstruct an optimal assignment");
  }
  out.sigma = m.sigma();
  for (std::size_t i = 0; i < n; ++i) out.total += score(i, out.sigma[i]);
  return out;
}

}  // namespace rootflow::perm
