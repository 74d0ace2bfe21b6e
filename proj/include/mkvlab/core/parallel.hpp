#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mkvlab {

// Worker cap: MKVLAB_THREADS if set, else the hardware concurrency.
// set_max_threads() overrides both (0 restores the default).
std::size_t max_threads();
void set_max_threads(std::size_t n);

// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries
// depend only on n and the thread count, and each index is touched by exactly
// one chunk, so bodies that write per-index results are deterministic under
// any thread count. The exception of the lowest failing chunk is rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t grain = 256) {
  if (n == 0) return;
  const std::size_t by_grain = (n + grain - 1) / std::max<std::size_t>(grain, 1);
  const std::size_t workers = std::min(max_threads(), by_grain);
  if (workers <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = n * w / workers;
      const std::size_t end = n * (w + 1) / workers;
      pool.emplace_back([&, w, begin, end] {
        try {
          body(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mkvlab
