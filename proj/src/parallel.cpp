#include "branchpde/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace branchpde::par {

namespace {
std::atomic<int> g_workers{0};
}

int worker_count() {
  int w = g_workers.load(std::memory_order_relaxed);
  if (w > 0) return w;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void set_worker_count(int workers) { g_workers.store(workers, std::memory_order_relaxed); }

void for_blocks(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& f) {
  if (n == 0) return;
  const std::size_t blocks = block_count(n);
  const int workers = worker_count();
  if (workers <= 1 || blocks == 1) {
    for (std::size_t b = 0; b < blocks; ++b)
      f(b, b * kBlockSize, std::min(n, (b + 1) * kBlockSize));
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto run = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= blocks || failed.load(std::memory_order_relaxed)) return;
      try {
        f(b, b * kBlockSize, std::min(n, (b + 1) * kBlockSize));
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  const int spawn = std::min<std::size_t>(static_cast<std::size_t>(workers), blocks) - 1;
  std::vector<std::thread> pool;
  pool.reserve(spawn);
  for (int i = 0; i < spawn; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void tree_combine(std::size_t blocks, std::size_t width, double* partials, double* out) {
  if (blocks == 0) {
    std::memset(out, 0, width * sizeof(double));
    return;
  }
  std::size_t active = blocks;
  while (active > 1) {
    const std::size_t pairs = active / 2;
    for (std::size_t p = 0; p < pairs; ++p) {
      double* dst = partials + (2 * p) * width;
      const double* src = partials + (2 * p + 1) * width;
      for (std::size_t m = 0; m < width; ++m) dst[m] += src[m];
    }
    // compact: surviving rows are the even-indexed ones plus a possible tail
    std::size_t next_active = pairs + (active % 2);
    for (std::size_t p = 1; p < pairs; ++p)
      std::memcpy(partials + p * width, partials + (2 * p) * width, width * sizeof(double));
    if (active % 2 == 1)
      std::memcpy(partials + pairs * width, partials + (active - 1) * width, width * sizeof(double));
    active = next_active;
  }
  std::memcpy(out, partials, width * sizeof(double));
}

}  // namespace branchpde::par
