#pragma once

#include <cstddef>
#include <functional>

namespace mgw {

/// Worker count: MGW_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

/// Override for the current process (0 restores the environment default).
void set_worker_count(unsigned n);

/// Splits [begin, end) into contiguous chunks and runs fn(lo, hi) on each.
/// Chunks are disjoint, so per-index results are schedule independent.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t minChunk = 64);

}  // namespace mgw
