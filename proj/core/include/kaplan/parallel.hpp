#ifndef KAPLAN_PARALLEL_HPP
#define KAPLAN_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kaplan {

/// Worker count used when a caller passes 0. Initialised from the
/// KAPLAN_THREADS environment variable, else the hardware concurrency.
std::size_t default_thread_count();
void set_default_thread_count(std::size_t threads);

/// Calls body(i) for i in [0, n) on up to `threads` workers (0 = default).
///
/// Indices are handed out dynamically, so body must only write to
/// per-index state. The first exception thrown by any call is rethrown
/// after all workers have stopped.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t threads = 0)
{
    if (threads == 0) {
        threads = default_thread_count();
    }
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                failed.store(true);
            }
        }
    };

    {
        std::vector<std::jthread> pool;
        pool.reserve(threads - 1);
        for (std::size_t t = 0; t + 1 < threads; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

} // namespace kaplan

#endif // KAPLAN_PARALLEL_HPP
