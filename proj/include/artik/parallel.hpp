#pragma once

#include <functional>

namespace artik {

// Process-wide worker cap for parallel_for. 1 disables threading entirely;
// 0 restores the hardware default. The CLI maps --threads here.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks over at
// most thread_count() threads. fn must only write to per-index slots; with
// that discipline results are identical for any thread count.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace artik
