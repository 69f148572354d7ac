#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace rootflow::scm {

// Directed acyclic graph over variables 0..d-1. has_edge(i, j) means i -> j.
// Construction validates the acyclicity invariant.
class Dag {
 public:
  Dag() = default;
  // Empty graph on d nodes.
  explicit Dag(std::size_t d);
  // Throws ValidationError on self-loops or cycles, DimensionError on a
  // non-square matrix.
  explicit Dag(const std::vector<std::vector<std::uint8_t>>& adjacency);

  static Dag chain(std::size_t d);

  std::size_t size() const noexcept { return d_; }
  bool has_edge(std::size_t from, std::size_t to) const { return adj_[from * d_ + to] != 0; }
  // Throws ValidationError if the edge would close a cycle.
  void add_edge(std::size_t from, std::size_t to);

  std::vector<std::size_t> parents(std::size_t node) const;
  std::vector<std::size_t> children(std::size_t node) const;
  // Nodes reachable from `node` by a directed path of length >= 1.
  std::vector<std::size_t> descendants(std::size_t node) const;
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  std::size_t edge_count() const noexcept;
  // Kahn's algorithm, smallest ready index first.
  std::vector<std::size_t> topological_order() const;
  // Same graph with node v renamed to relabel[v].
  Dag relabeled(const std::vector<std::size_t>& relabel) const;

  std::vector<std::vector<std::uint8_t>> adjacency() const;

  friend bool operator==(const Dag&, const Dag&) = default;

 private:
  static std::optional<std::vector<std::size_t>> try_topological_order(
      std::size_t d, const std::vector<std::uint8_t>& adj);

  std::size_t d_ = 0;
  std::vector<std::uint8_t> adj_;
};

}  // namespace rootflow::scm
