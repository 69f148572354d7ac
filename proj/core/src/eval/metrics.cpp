#include "rootflow/eval/metrics.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "rootflow/error.hpp"

namespace rootflow::eval {

CausalOrder::CausalOrder(std::vector<std::size_t> order)
    : order_(std::move(order)), position_(order_.size(), order_.size()) {
  for (std::size_t k = 0; k < order_.size(); ++k) {
    const std::size_t v = order_[k];
    if (v >= order_.size() || position_[v] != order_.size())
      throw ValidationError("order is not a permutation of 0..d-1");
    position_[v] = k;
  }
}

CausalOrder CausalOrder::identity(std::size_t d) {
  std::vector<std::size_t> o(d);
  std::iota(o.begin(), o.end(), std::size_t{0});
  return CausalOrder(std::move(o));
}

CausalOrder CausalOrder::parse_one_based(const std::string& text) {
  std::vector<std::size_t> order;
  std::stringstream ss(text);
  std::string item;
  std::size_t col = 0;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t\r\n");
    const auto last = item.find_last_not_of(" \t\r\n");
    if (first == std::string::npos) throw ParseError(0, col, "empty entry in order list");
    item = item.substr(first, last - first + 1);
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      throw ParseError(0, col, "order entry '" + item + "' is not an integer");
    }
    if (used != item.size() || v < 1) throw ParseError(0, col, "order entry '" + item + "' is not a positive integer");
    order.push_back(static_cast<std::size_t>(v - 1));
    ++col;
  }
  return CausalOrder(std::move(order));
}

std::string CausalOrder::to_one_based_string() const {
  std::string out;
  for (std::size_t k = 0; k < order_.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(order_[k] + 1);
  }
  return out;
}

std::size_t count_backward(const CausalOrder& order, const scm::Dag& dag) {
  if (order.size() != dag.size())
    throw ArgumentError("order covers " + std::to_string(order.size()) + " variables, graph has " +
                        std::to_string(dag.size()));
  std::size_t backward = 0;
  for (const auto& [from, to] : dag.edges())
    if (order.position(from) > order.position(to)) ++backward;
  return backward;
}

bool is_valid_order(const CausalOrder& order, const scm::Dag& dag) {
  return count_backward(order, dag) == 0;
}

RunStats aggregate(std::span<const double> values) {
  if (values.size() < 2) throw ArgumentError("aggregate needs at least 2 values");
  RunStats s;
  s.values.assign(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / (n - 1.0));
  return s;
}

}  // namespace rootflow::eval
