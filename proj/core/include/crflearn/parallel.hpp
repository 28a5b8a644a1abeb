#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace crflearn {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Work is split into fixed-size blocks so that floating-point reductions are
// bitwise identical for every thread count.
inline constexpr std::size_t kParallelBlock = 16;

inline std::size_t block_count(std::size_t n) {
  return (n + kParallelBlock - 1) / kParallelBlock;
}

/// Runs fn(lo, hi, block_index) over the blocks of [0, n). fn must write only
/// to locations owned by its block.
template <class Fn>
void parallel_blocks(std::size_t n, int threads, Fn&& fn) {
  const std::size_t blocks = block_count(n);
  if (blocks == 0) return;
  threads = resolve_threads(threads);
  auto run_block = [&](std::size_t b) {
    const std::size_t lo = b * kParallelBlock;
    const std::size_t hi = std::min(n, lo + kParallelBlock);
    fn(lo, hi, b);
  };
  if (threads <= 1 || blocks == 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks || failed.load()) return;
      try {
        run_block(b);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<std::size_t>(blocks, static_cast<std::size_t>(threads)));
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Maps each block of [0, n) to a partial result, then folds the partials in
/// ascending block order (deterministic reduction).
template <class R, class Map, class Fold>
R block_mapreduce(std::size_t n, int threads, R init, Map&& map, Fold&& fold) {
  const std::size_t blocks = block_count(n);
  std::vector<R> parts(blocks);
  parallel_blocks(n, threads, [&](std::size_t lo, std::size_t hi, std::size_t b) {
    parts[b] = map(lo, hi);
  });
  R acc = std::move(init);
  for (std::size_t b = 0; b < blocks; ++b) fold(acc, std::move(parts[b]));
  return acc;
}

}  // namespace crflearn
