#include "rootflow/num/finite_diff.hpp"

#include <cmath>
#include <string>

#include "rootflow/error.hpp"

namespace rootflow::num {

Vector finite_diff_grad(const ScalarFn& f, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw ArgumentError("finite-difference step must be > 0");
  Vector probe(x.begin(), x.end());
  Vector grad(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const double fp = f(probe);
    probe[j] = x[j] - h;
    const double fm = f(probe);
    probe[j] = x[j];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("non-finite function value probing coordinate " + std::to_string(j));
    grad[j] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace rootflow::num
