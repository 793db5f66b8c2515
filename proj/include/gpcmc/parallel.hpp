#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace gpcmc {

/// 0 or negative means "use all hardware threads".
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Static contiguous partition of [0, n) across `threads` workers.
/// Each worker writes only its own slots, so results do not depend on the
/// schedule or the thread count. `grain` is the minimum n worth spawning for.
template <typename Fn>
void parallel_for(std::int64_t n, int threads, Fn&& body, std::int64_t grain = 4096) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n < grain || n < 2) {
    body(std::int64_t{0}, n);
    return;
  }
  const int workers = static_cast<int>(std::min<std::int64_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = w * chunk;
    const std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] { body(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace gpcmc
