#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spectrum {

inline int default_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Partitions [0, total) into fixed-size blocks and hands each block to
// fn(block_index, begin, end). Blocks are claimed dynamically by worker
// threads, so callers must write results into per-block slots and reduce in
// block order afterwards; outputs then do not depend on the thread count.
template <class Fn>
void for_blocks(std::uint64_t total, std::uint64_t block_size, int threads, Fn&& fn) {
  if (total == 0) return;
  if (block_size == 0) block_size = 1;
  const std::uint64_t blocks = (total + block_size - 1) / block_size;
  const std::uint64_t cap = std::min<std::uint64_t>(
      blocks, static_cast<std::uint64_t>(std::max(1, threads)));
  const int workers = static_cast<int>(cap);
  if (workers == 1) {
    for (std::uint64_t b = 0; b < blocks; ++b)
      fn(b, b * block_size, std::min(total, (b + 1) * block_size));
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      try {
        for (;;) {
          std::uint64_t b = next.fetch_add(1);
          if (b >= blocks) return;
          fn(b, b * block_size, std::min(total, (b + 1) * block_size));
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        next.store(blocks);  // drain remaining blocks
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace spectrum
