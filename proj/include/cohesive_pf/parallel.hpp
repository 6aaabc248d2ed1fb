#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace cohesive_pf {

/// Worker count for element loops: COHESIVE_PF_THREADS if set, else all cores.
inline unsigned thread_count() {
  static const unsigned count = [] {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("COHESIVE_PF_THREADS")) {
      try {
        const long v = std::stol(env);
        if (v >= 1) return static_cast<unsigned>(std::min<long>(v, 1024));
      } catch (...) {
      }
    }
    return hw;
  }();
  return count;
}

/// Static-partition loop over [0, n). `body(i)` must only write data owned by index i.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const unsigned workers = std::min<std::size_t>(thread_count(), std::max<std::size_t>(1, n / 4096));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &body] {
      for (std::size_t i = begin; i < end; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace cohesive_pf
