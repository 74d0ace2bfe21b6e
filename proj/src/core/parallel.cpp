#include "mkvlab/core/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace mkvlab {
namespace {

std::atomic<std::size_t> g_override{0};

std::size_t from_environment() {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MKVLAB_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (...) {
      // fall through to the hardware default
    }
  }
  return hw;
}

}  // namespace

std::size_t max_threads() {
  const std::size_t o = g_override.load(std::memory_order_relaxed);
  return o != 0 ? o : from_environment();
}

void set_max_threads(std::size_t n) { g_override.store(n, std::memory_order_relaxed); }

}  // namespace mkvlab
