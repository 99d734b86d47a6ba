#ifndef INFOSPEC_PARALLEL_HPP
#define INFOSPEC_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace infospec {

inline int default_workers() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(block_index) for every block in [0, block_count). Blocks are handed
// out dynamically; callers keep results worker-count invariant by writing
// into per-block slots and combining in block order afterwards.
template <class Fn>
void parallel_blocks(std::size_t block_count, int workers, Fn&& fn) {
  if (workers <= 0) workers = default_workers();
  if (workers == 1 || block_count <= 1) {
    for (std::size_t i = 0; i < block_count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= block_count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::size_t nthreads =
      std::min<std::size_t>(block_count, static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(nthreads - 1);
  for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace infospec

#endif  // INFOSPEC_PARALLEL_HPP
