#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace pathweave {

// Upper bound on worker threads. PATHWEAVE_THREADS caps it; otherwise the
// hardware concurrency is used.
inline unsigned thread_budget() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PATHWEAVE_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0)
      return static_cast<unsigned>(std::min<long>(v, 1024));
  }
  return hw;
}

// Runs body(begin, end) over contiguous chunks of [0, count). Chunk
// boundaries depend only on `count` and the budget, and each index is
// handled by exactly one call, so per-index results are reproducible.
template <typename Body>
void parallel_for(std::size_t count, Body&& body,
                  std::size_t min_chunk = 4096) {
  if (count == 0) return;
  unsigned workers = thread_budget();
  std::size_t chunks = std::min<std::size_t>(
      workers, std::max<std::size_t>(1, count / std::max<std::size_t>(1, min_chunk)));
  if (chunks <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(chunks - 1);
  std::size_t step = (count + chunks - 1) / chunks;
  for (std::size_t c = 1; c < chunks; ++c) {
    std::size_t b = c * step, e = std::min(count, b + step);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(std::size_t{0}, std::min(count, step));
  for (auto& t : pool) t.join();
}

// Pairwise summation in a fixed order; used where reductions must be
// bit-reproducible.
template <typename It>
double pairwise_sum(It first, It last) {
  auto n = static_cast<std::size_t>(last - first);
  if (n <= 8) {
    double s = 0.0;
    for (; first != last; ++first) s += *first;
    return s;
  }
  It mid = first + static_cast<std::ptrdiff_t>(n / 2);
  return pairwise_sum(first, mid) + pairwise_sum(mid, last);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.begin(), v.end());
}

}  // namespace pathweave
