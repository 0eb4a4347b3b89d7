#include "mgw/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace mgw {

namespace {
std::atomic<unsigned> gOverride{0};

unsigned from_environment() {
  if (const char* env = std::getenv("MGW_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}
}  // namespace

unsigned worker_count() {
  const unsigned o = gOverride.load();
  return o > 0 ? o : from_environment();
}

void set_worker_count(unsigned n) { gOverride.store(n); }

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t minChunk) {
  if (end <= begin) return;
  const std::size_t total = end - begin;
  const std::size_t maxWorkers = std::max<std::size_t>(1, total / std::max<std::size_t>(1, minChunk));
  const std::size_t workers = std::min<std::size_t>(worker_count(), maxWorkers);
  if (workers <= 1) {
    fn(begin, end);
    return;
  }
  const std::size_t chunk = (total + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, w, lo, hi] {
      try {
        fn(lo, hi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace mgw
