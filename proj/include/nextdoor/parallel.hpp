#pragma once

#include <cstddef>
#include <functional>

namespace nextdoor {

// Worker count: NEXTDOOR_THREADS if set (>=1), else hardware concurrency.
unsigned worker_count();

// Runs fn(i) for i in [0, n). Items must write only to their own output
// slots and seed their own RNG substreams, so results are identical for any
// worker count. The first exception thrown by an item is rethrown here.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace nextdoor
