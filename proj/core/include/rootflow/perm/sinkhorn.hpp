#pragma once

#include <cstddef>

#include "rootflow/num/matrix.hpp"
#include "rootflow/num/rng.hpp"

namespace rootflow::perm {

// Soft permutation from logits: exp(logits / t) followed by `iters` rounds of
// row then column normalization. Normalization runs in the log domain, which
// subsumes the usual max-subtraction overflow guard.
num::Matrix sinkhorn(const num::Matrix& logits, double t, std::size_t iters);

// logits + i.i.d. Gumbel(0, 1) noise per entry.
num::Matrix gumbel_perturb(const num::Matrix& logits, num::RngStream& rng);

}  // namespace rootflow::perm
