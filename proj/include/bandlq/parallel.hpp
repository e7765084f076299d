#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace bandlq {

/// Number of worker threads kernels may use. BANDLQ_THREADS caps it;
/// unset means hardware concurrency.
inline int thread_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("BANDLQ_THREADS")) {
    try {
      int cap = std::stoi(env);
      if (cap >= 1) return std::min(cap, hw);
    } catch (...) {
    }
  }
  return hw;
}

/// Splits [0, n) into contiguous chunks and runs fn(begin, end) on each.
/// Chunk boundaries depend only on n and the thread count, and every index
/// is visited exactly once, so callers that write disjoint outputs per index
/// get results identical to a sequential run.
template <class Fn>
void parallel_for(std::int64_t n, Fn&& fn, std::int64_t min_chunk = 64) {
  const int threads = thread_count();
  if (threads <= 1 || n < 2 * min_chunk) {
    fn(std::int64_t{0}, n);
    return;
  }
  const std::int64_t chunks = std::min<std::int64_t>(threads, n / min_chunk);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(chunks));
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::int64_t begin = n * c / chunks;
    const std::int64_t end = n * (c + 1) / chunks;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace bandlq
