#include "rootflow/scm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rootflow/error.hpp"

namespace rootflow::scm {
namespace {

struct Moments {
  double mean;
  double variance;
};

Moments column_moments(const num::Matrix& m, std::size_t c) {
  const std::size_t n = m.rows();
  double mean = 0.0;
  for (std::size_t r = 0; r < n; ++r) mean += m(r, c);
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double dv = m(r, c) - mean;
    ss += dv * dv;
  }
  return {mean, ss / static_cast<double>(n)};
}

}  // namespace

void Dataset::validate() const {
  if (n() < 2) throw ArgumentError("dataset needs at least 2 rows, got " + std::to_string(n()));
  if (column_names.size() != d())
    throw DimensionError("dataset has " + std::to_string(d()) + " columns but " +
                         std::to_string(column_names.size()) + " names");
  if (!values.all_finite()) throw NumericError("dataset contains non-finite values");
}

Dataset Dataset::select_columns(const std::vector<std::size_t>& columns) const {
  Dataset out;
  out.values = num::Matrix(n(), columns.size());
  out.standardized = standardized;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] >= d()) throw ArgumentError("column index out of range");
    out.column_names.push_back(column_names[columns[k]]);
    for (std::size_t r = 0; r < n(); ++r) out.values(r, k) = values(r, columns[k]);
  }
  return out;
}

std::vector<std::string> default_column_names(std::size_t d) {
  std::vector<std::string> names;
  names.reserve(d);
  for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

Dataset make_dataset(num::Matrix values, std::vector<std::string> names) {
  if (names.empty()) names = default_column_names(values.cols());
  Dataset ds{std::move(values), std::move(names), false};
  ds.validate();
  return ds;
}

Dataset standardize(const Dataset& ds) {
  ds.validate();
  Dataset out = ds;
  for (std::size_t c = 0; c < ds.d(); ++c) {
    const auto [mean, var] = column_moments(ds.values, c);
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12))
      throw DegenerateColumnError(c, "column '" + ds.column_names[c] + "' is (near) constant");
    for (std::size_t r = 0; r < ds.n(); ++r) out.values(r, c) = (ds.values(r, c) - mean) / sd;
  }
  out.standardized = true;
  return out;
}

std::vector<std::size_t> varsort_order(const Dataset& ds) {
  std::vector<double> variance(ds.d());
  for (std::size_t c = 0; c < ds.d(); ++c) variance[c] = column_moments(ds.values, c).variance;
  std::vector<std::size_t> order(ds.d());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return variance[a] < variance[b]; });
  return order;
}

}  // namespace rootflow::scm
