#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rootflow/scm/dag.hpp"

namespace rootflow::eval {

// order[k] = variable placed at position k. Construction checks bijectivity.
class CausalOrder {
 public:
  CausalOrder() = default;
  explicit CausalOrder(std::vector<std::size_t> order);

  static CausalOrder identity(std::size_t d);
  // Parses "1,2,3" (1-based). Throws ParseError / ValidationError.
  static CausalOrder parse_one_based(const std::string& text);

  std::size_t size() const noexcept { return order_.size(); }
  std::size_t operator[](std::size_t k) const { return order_[k]; }
  const std::vector<std::size_t>& values() const noexcept { return order_; }
  std::size_t position(std::size_t variable) const { return position_.at(variable); }
  // "1,2,3"
  std::string to_one_based_string() const;

  friend bool operator==(const CausalOrder& a, const CausalOrder& b) { return a.order_ == b.order_; }

 private:
  std::vector<std::size_t> order_;
  std::vector<std::size_t> position_;
};

// Edges i -> j with position(i) > position(j). Throws ArgumentError when the
// order and graph sizes differ.
std::size_t count_backward(const CausalOrder& order, const scm::Dag& dag);

bool is_valid_order(const CausalOrder& order, const scm::Dag& dag);

// Sample mean and sample (ddof = 1) standard deviation.
struct RunStats {
  std::vector<double> values;
  double mean = 0.0;
  double std = 0.0;
};

// Throws ArgumentError for fewer than 2 values.
RunStats aggregate(std::span<const double> values);

}  // namespace rootflow::eval
