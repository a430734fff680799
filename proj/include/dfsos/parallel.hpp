#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dfsos {

/// Worker cap shared by every parallel loop. Defaults to the DFSOS_THREADS
/// environment variable, else the hardware concurrency.
unsigned max_threads();
void set_max_threads(unsigned threads);

namespace detail {
inline bool& inside_parallel_region() {
    thread_local bool inside = false;
    return inside;
}
}  // namespace detail

/// Runs fn(i) for i in [0, count). Jobs write results by index, so output order
/// never depends on scheduling. The first exception thrown is rethrown.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    // Nested loops run serially inside the outer loop's workers.
    const std::size_t workers =
        detail::inside_parallel_region() ? 1 : std::min<std::size_t>(max_threads(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        detail::inside_parallel_region() = true;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
        detail::inside_parallel_region() = false;
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace dfsos
