#ifndef COMPLYFED_PARALLEL_H_
#define COMPLYFED_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace complyfed {

// Worker count: COMPLYFED_THREADS when set to a positive integer, else the
// hardware concurrency (at least 1).
std::size_t default_thread_count();

// Runs body(i) for i in [0, count) on up to max_threads threads. Each index
// runs exactly once; the first exception thrown is rethrown after all
// workers join.
void parallel_for(std::size_t count, std::size_t max_threads,
                  const std::function<void(std::size_t)> &body);

}  // namespace complyfed

#endif  // COMPLYFED_PARALLEL_H_
