#ifndef NHRCH_PARALLEL_HPP
#define NHRCH_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace nhrch {

// Worker count: hardware concurrency, capped by NHRCH_THREADS when set.
std::size_t thread_budget();

// Runs body(i) for i in [0, count). Each index is visited exactly once; callers write results
// into index-addressed slots so aggregation order never depends on scheduling. Calls made
// from inside a worker run serially. The first exception thrown by any body is rethrown
// after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace nhrch

#endif
