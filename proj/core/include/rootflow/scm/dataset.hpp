#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rootflow/num/matrix.hpp"

namespace rootflow::scm {

// n x d observations; column j holds variable j.
struct Dataset {
  num::Matrix values;
  std::vector<std::string> column_names;
  bool standardized = false;

  std::size_t n() const noexcept { return values.rows(); }
  std::size_t d() const noexcept { return values.cols(); }

  // n >= 2, names match columns, entries finite. Throws on violation.
  void validate() const;

  // Keeps the given columns, in the given order.
  Dataset select_columns(const std::vector<std::size_t>& columns) const;
};

Dataset make_dataset(num::Matrix values, std::vector<std::string> names = {});

// "x1", "x2", ...
std::vector<std::string> default_column_names(std::size_t d);

// Per-column (x - mean) / std with the population standard deviation.
// Throws DegenerateColumnError for a column with std <= 1e-12.
Dataset standardize(const Dataset& ds);

// Column indices ascending by marginal variance; equal variances keep the
// lower index first.
std::vector<std::size_t> varsort_order(const Dataset& ds);

}  // namespace rootflow::scm
