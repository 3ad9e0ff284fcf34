#pragma once

#include <cstddef>
#include <functional>

namespace narrprobe {

// Worker cap: NARRPROBE_THREADS when set to a positive integer, otherwise
// the hardware concurrency (at least 1).
std::size_t worker_count();

// Runs body(begin, end) over contiguous chunks of [0, n). Callers write
// per-index results only, so output does not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace narrprobe
