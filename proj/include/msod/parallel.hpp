#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace msod {

using Rng = std::mt19937_64;

// Worker count: DESIGN_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int worker_count();

// Counter-based substream seed: a splitmix64 mix of (seed, index). Draw k of
// a Monte Carlo loop always sees the same stream regardless of scheduling.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

inline Rng substream(std::uint64_t seed, std::uint64_t index) {
  return Rng(substream_seed(seed, index));
}

// Runs fn(block_index, begin, end) over [0, count) split into fixed-size
// blocks. Block boundaries do not depend on the worker count, so per-block
// partial results reduced in block order are reproducible.
template <class Fn>
void parallel_blocks(std::size_t count, std::size_t block_size, Fn&& fn) {
  if (count == 0) return;
  block_size = std::max<std::size_t>(block_size, 1);
  const std::size_t blocks = (count + block_size - 1) / block_size;
  const std::size_t workers =
      std::min<std::size_t>(blocks, static_cast<std::size_t>(worker_count()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        fn(b, b * block_size, std::min(count, (b + 1) * block_size));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(blocks);
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace msod
