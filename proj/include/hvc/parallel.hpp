#pragma once

#include <cstddef>
#include <functional>

namespace hvc {

// Worker count used by parallel_chunks. Defaults to 1; the CLI sets it from
// HVC_THREADS.
void set_thread_count(std::size_t n);
std::size_t thread_count();

// Reads HVC_THREADS (if set and positive) and applies it.
void configure_threads_from_env();

// Calls fn(begin, end) for consecutive chunks of [0, n) of at most
// `chunk` elements. The chunk boundaries depend only on n and chunk, never on
// the worker count, so any per-chunk computation is bit-identical whether it
// runs on one thread or many.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace hvc
