#pragma once

#include <cstddef>
#include <functional>

namespace arspl {

// Worker count for parallel_for; 0 means std::thread::hardware_concurrency.
void set_worker_count(unsigned workers);
unsigned worker_count();

// Runs fn(i) for i in [0, n). Each index must write only its own outputs so
// results are independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace arspl
