// parallel.hpp: minimal fork/join helpers

#pragma once

#include <cstddef>
#include <functional>

namespace cwnoise {

/// Worker count from CWNOISE_THREADS, falling back to the hardware concurrency.
std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Tasks are handed
/// out dynamically, so body must not depend on which worker runs it.
/// threads == 0 means default_thread_count().
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t threads = 0);

}  // namespace cwnoise
