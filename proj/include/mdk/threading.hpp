#pragma once

#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mdk {

/// Effective worker count: the requested value clamped by the MDK_THREADS
/// environment variable and the hardware. requested==0 means "one thread".
inline std::size_t resolve_threads(std::size_t requested) {
    std::size_t n = requested == 0 ? 1 : requested;
    if (const char* cap = std::getenv("MDK_THREADS")) {
        const long v = std::atol(cap);
        if (v > 0 && static_cast<std::size_t>(v) < n) n = static_cast<std::size_t>(v);
    }
    const std::size_t hw = std::thread::hardware_concurrency();
    if (hw > 0 && n > hw) n = hw;
    return n;
}

/// Static-partition parallel loop. Each index is processed exactly once and
/// results must be written to per-index slots, which keeps outputs identical
/// to the serial run.
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)>& body) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    if (threads > n) threads = n;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mdk
