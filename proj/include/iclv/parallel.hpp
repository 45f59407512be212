#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace iclv {

// Thread count from an explicit request, else ICLV_THREADS, else hardware.
int resolve_threads(int requested);

// Runs body(i) for i in [0, n) on up to `threads` workers using static
// contiguous chunks. Bodies must only write to per-index storage.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

// Fixed-order pairwise summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> xs);

}  // namespace iclv
