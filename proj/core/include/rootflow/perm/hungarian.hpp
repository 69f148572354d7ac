#pragma once

#include <cstddef>
#include <vector>

#include "rootflow/num/matrix.hpp"

namespace rootflow::perm {

struct Assignment {
  // row i is matched to column sigma[i]
  std::vector<std::size_t> sigma;
  double total = 0.0;
};

// Maximum-weight perfect assignment on a square matrix (Kuhn-Munkres with
// potentials). Among optimal assignments the lexicographically smallest sigma
// is returned; entries within 1e-9 * n * max|score| of tight count as ties.
Assignment hungarian(const num::Matrix& score);

// Optimal total only.
double max_assignment_value(const num::Matrix& score);

}  // namespace rootflow::perm
