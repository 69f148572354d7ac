#include "rootflow/scm/dag.hpp"

#include <queue>
#include <string>

#include "rootflow/error.hpp"

namespace rootflow::scm {

Dag::Dag(std::size_t d) : d_(d), adj_(d * d, 0) {}

Dag::Dag(const std::vector<std::vector<std::uint8_t>>& adjacency)
    : d_(adjacency.size()), adj_(d_ * d_, 0) {
  for (std::size_t i = 0; i < d_; ++i) {
    if (adjacency[i].size() != d_) throw DimensionError("adjacency matrix must be square");
    for (std::size_t j = 0; j < d_; ++j) {
      if (adjacency[i][j] > 1) throw ValidationError("adjacency entries must be 0 or 1");
      adj_[i * d_ + j] = adjacency[i][j];
    }
    if (adj_[i * d_ + i]) throw ValidationError("self-loop on node " + std::to_string(i));
  }
  if (!try_topological_order(d_, adj_)) throw ValidationError("adjacency matrix contains a cycle");
}

Dag Dag::chain(std::size_t d) {
  Dag g(d);
  for (std::size_t i = 0; i + 1 < d; ++i) g.adj_[i * d + i + 1] = 1;
  return g;
}

void Dag::add_edge(std::size_t from, std::size_t to) {
  if (from >= d_ || to >= d_) throw ArgumentError("edge endpoint out of range");
  if (from == to) throw ValidationError("self-loop on node " + std::to_string(from));
  auto adj = adj_;
  adj[from * d_ + to] = 1;
  if (!try_topological_order(d_, adj)) throw ValidationError("edge would create a cycle");
  adj_ = std::move(adj);
}

std::vector<std::size_t> Dag::parents(std::size_t node) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < d_; ++j)
    if (has_edge(j, node)) out.push_back(j);
  return out;
}

std::vector<std::size_t> Dag::children(std::size_t node) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < d_; ++j)
    if (has_edge(node, j)) out.push_back(j);
  return out;
}

std::vector<std::size_t> Dag::descendants(std::size_t node) const {
  std::vector<std::uint8_t> seen(d_, 0);
  std::vector<std::size_t> stack = children(node);
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (seen[v]) continue;
    seen[v] = 1;
    for (std::size_t c : children(v))
      if (!seen[c]) stack.push_back(c);
  }
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < d_; ++v)
    if (seen[v]) out.push_back(v);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> Dag::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = 0; j < d_; ++j)
      if (has_edge(i, j)) out.emplace_back(i, j);
  return out;
}

std::size_t Dag::edge_count() const noexcept {
  std::size_t n = 0;
  for (auto e : adj_) n += e;
  return n;
}

std::optional<std::vector<std::size_t>> Dag::try_topological_order(
    std::size_t d, const std::vector<std::uint8_t>& adj) {
  std::vector<std::size_t> indegree(d, 0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) indegree[j] += adj[i * d + j];
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < d; ++v)
    if (indegree[v] == 0) ready.push(v);
  std::vector<std::size_t> order;
  order.reserve(d);
  while (!ready.empty()) {
    const std::size_t v = ready.top();
    ready.pop();
    order.push_back(v);
    for (std::size_t j = 0; j < d; ++j)
      if (adj[v * d + j] && --indegree[j] == 0) ready.push(j);
  }
  if (order.size() != d) return std::nullopt;
  return order;
}

std::vector<std::size_t> Dag::topological_order() const {
  return *try_topological_order(d_, adj_);
}

Dag Dag::relabeled(const std::vector<std::size_t>& relabel) const {
  if (relabel.size() != d_) throw DimensionError("relabel size mismatch");
  Dag g(d_);
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = 0; j < d_; ++j)
      if (has_edge(i, j)) g.adj_[relabel[i] * d_ + relabel[j]] = 1;
  return g;
}

std::vector<std::vector<std::uint8_t>> Dag::adjacency() const {
  std::vector<std::vector<std::uint8_t>> out(d_, std::vector<std::uint8_t>(d_, 0));
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = 0; j < d_; ++j) out[i][j] = adj_[i * d_ + j];
  return out;
}

}  // namespace rootflow::scm
