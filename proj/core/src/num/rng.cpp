#include "rootflow/num/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace rootflow::num {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_path(std::uint64_t master, const std::vector<std::uint64_t>& path) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::vector<std::uint64_t> path)
    : master_seed_(master_seed),
      path_(std::move(path)),
      engine_(hash_path(master_seed_, path_)) {}

RngStream RngStream::derive(std::uint64_t k) const {
  auto p = path_;
  p.push_back(k);
  return RngStream(master_seed_, std::move(p));
}

RngStream RngStream::derive(std::initializer_list<std::uint64_t> ks) const {
  auto p = path_;
  p.insert(p.end(), ks.begin(), ks.end());
  return RngStream(master_seed_, std::move(p));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
  if (spare_normal_) {
    const double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

double RngStream::gumbel() { return -std::log(-std::log(uniform_open())); }

bool RngStream::bernoulli(double p) { return uniform() < p; }

std::size_t RngStream::below(std::size_t n) {
  if (n <= 1) return 0;
  // Rejection sampling removes modulo bias.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(p));
  return p;
}

}  // namespace rootflow::num
