#pragma once

// Deterministic block-parallel reduction.
//
// Work [0, n) is cut into fixed-size blocks; the block layout depends only on
// n and block_size, never on the thread count. Each block reduces into its own
// accumulator and blocks are merged by a pairwise tree in index order, so results are bitwise
// identical for any number of workers.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace stochtr {

/// Worker count: STOCHTR_THREADS if set, else the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("STOCHTR_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

template <class Acc, class MakeAcc, class Body, class Merge>
Acc block_reduce(std::size_t n, std::size_t block_size, MakeAcc make, Body body, Merge merge) {
  const std::size_t blocks = (n + block_size - 1) / block_size;
  std::vector<Acc> partial;
  partial.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) partial.push_back(make());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        body(b * block_size, std::min(n, (b + 1) * block_size), partial[b]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), blocks));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Pairwise tree over block indices: (0,1), (2,3), ... then (0,2), (4,6), ...
  if (partial.empty()) return make();
  for (std::size_t stride = 1; stride < blocks; stride *= 2)
    for (std::size_t i = 0; i + stride < blocks; i += 2 * stride) merge(partial[i], partial[i + stride]);
  return std::move(partial.front());
}

}  // namespace stochtr
