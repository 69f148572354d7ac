#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace rootflow::num {

// Seeded random stream identified by (master_seed, path). Substreams are
// derived by appending to the path; the engine seed is a splitmix64 hash of
// the whole path, so derive(k) is reproducible and distinct paths decorrelate.
//
// All variate transforms are implemented here rather than through
// <random> distributions, whose output is implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed, std::vector<std::uint64_t> path = {});

  RngStream derive(std::uint64_t k) const;
  RngStream derive(std::initializer_list<std::uint64_t> ks) const;

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  const std::vector<std::uint64_t>& path() const noexcept { return path_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on the open interval (0, 1).
  double uniform_open();
  double uniform(double lo, double hi);
  double normal();
  // Standard Gumbel(0, 1).
  double gumbel();
  bool bernoulli(double p);
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  // Uniformly random permutation of 0..n-1 (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t n);
  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::uint64_t master_seed_;
  std::vector<std::uint64_t> path_;
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

}  // namespace rootflow::num
