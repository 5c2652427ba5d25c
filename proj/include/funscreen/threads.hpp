#pragma once

#include <cstddef>
#include <functional>

namespace funscreen {

// Worker count for a loop of `jobs` independent iterations: the minimum of
// the job count, the hardware thread count, and the FUNSCREEN_THREADS
// environment cap (when set to a positive integer).
std::size_t worker_count(std::size_t jobs);

// Runs fn(0..n-1) across workers. Iterations must be independent and write
// only to their own slots; that keeps results identical to the serial loop
// regardless of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace funscreen
