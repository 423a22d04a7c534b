#pragma once

#include <cstddef>
#include <functional>

namespace heislab {

// Process-wide worker count used when a call passes workers <= 0. Starts at 1.
void set_default_workers(int n);
int default_workers();

// Runs fn(i) for i in [0, n) on up to `workers` threads. Work items must be
// independent; results are written by index so the outcome does not depend on
// scheduling. If any item throws, the exception of the lowest failing index is
// rethrown after all threads finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace heislab
