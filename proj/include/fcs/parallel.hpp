#pragma once

// Minimal fork-join helper. Work is split into fixed contiguous ranges, one
// per worker, so callers that stage results per range (or write to disjoint
// slots) get output independent of the thread count.

#include <cstdint>
#include <functional>

namespace fcs {

int resolve_threads(int requested);  // 0 -> hardware concurrency

// Invokes fn(begin, end, worker) on up to `threads` workers covering
// [0, n). Ranges are contiguous and assigned deterministically; with
// threads == 1 everything runs inline.
void parallel_ranges(std::int64_t n, int threads,
                     const std::function<void(std::int64_t, std::int64_t, int)>& fn);

}  // namespace fcs
