#pragma once

#include <cstddef>
#include <functional>

namespace srm {

// Worker count: SRMH_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

// Runs body(begin, end) over contiguous chunks of [0, n). Chunking is static,
// so results written to disjoint slots are independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace srm
