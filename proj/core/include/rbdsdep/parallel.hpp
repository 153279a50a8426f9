#pragma once

#include <cstddef>
#include <functional>

namespace rbdsdep {

/// Upper bound on worker threads used by every parallel loop in the library. Defaults to 1.
void set_thread_count(std::size_t threads);
std::size_t thread_count();

/// Runs body(i) for i in [0, count). Each index is handled by exactly one worker, in contiguous
/// chunks, so results written to index-addressed storage do not depend on the thread count.
/// The first exception thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace rbdsdep
