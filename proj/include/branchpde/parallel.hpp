#pragma once

#include <cstddef>
#include <functional>

namespace branchpde::par {

/// Fixed work-decomposition block; results never depend on how blocks are
/// scheduled onto threads, only on these boundaries.
inline constexpr std::size_t kBlockSize = 4096;

inline std::size_t block_count(std::size_t n) { return (n + kBlockSize - 1) / kBlockSize; }

int worker_count();
void set_worker_count(int workers);  // 0 = hardware concurrency

/// Run f(block_index, begin, end) for every block of [0, n). Blocks are
/// dispatched to worker_count() threads; f must only write state owned by its
/// block. Exceptions are rethrown on the calling thread.
void for_blocks(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& f);

/// Pairwise (tree) combine of per-block partial vectors, in fixed block order:
/// reduces rounding drift and is identical for every worker count.
/// `partials` is blocks*width, row-major; the result lands in out[0..width).
void tree_combine(std::size_t blocks, std::size_t width, double* partials, double* out);

}  // namespace branchpde::par
