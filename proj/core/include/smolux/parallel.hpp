#ifndef SMOLUX_PARALLEL_HPP_
#define SMOLUX_PARALLEL_HPP_

#include <cstdlib>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace smolux {

// Thread budget: SMOLUX_THREADS when set (either direction, so determinism
// across thread counts is testable on single-core machines), otherwise the
// hardware count. Read per call so tests can flip the variable between runs
// of one process.
inline unsigned thread_budget() {
  if (const char* env = std::getenv("SMOLUX_THREADS")) {
    const long requested = std::strtol(env, nullptr, 10);
    if (requested >= 1 && requested <= 256)
      return static_cast<unsigned>(requested);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs body(i) for i in [0, n). Work is split into contiguous index ranges,
// one per worker; each range runs sequentially on its thread. Results must be
// written to disjoint slots indexed by i, which keeps output byte-identical
// for every thread count.
inline void parallel_for(std::size_t n,
                         const std::function<void(std::size_t)>& body) {
  const std::size_t workers_wanted = thread_budget();
  if (n == 0) return;
  const std::size_t workers = workers_wanted < n ? workers_wanted : n;
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = lo + chunk < n ? lo + chunk : n;
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace smolux

#endif  // SMOLUX_PARALLEL_HPP_
