#pragma once

#include <functional>
#include <span>

#include "rootflow/num/matrix.hpp"

namespace rootflow::num {

using ScalarFn = std::function<double(std::span<const double>)>;

// Central differences (f(x + h e_j) - f(x - h e_j)) / 2h for every coordinate.
// Throws NumericError if any evaluation is non-finite.
Vector finite_diff_grad(const ScalarFn& f, std::span<const double> x, double h);

}  // namespace rootflow::num
