#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace rootflow::num {

// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency). Each index runs exactly once; callers write results into
// per-index slots, so output never depends on scheduling. The first exception
// thrown (lowest index) is rethrown after all workers join.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned resolve_threads(unsigned requested) noexcept;

}  // namespace rootflow::num
