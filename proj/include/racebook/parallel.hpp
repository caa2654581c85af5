#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace racebook {

// Runs fn(i) for i in [0, count) on up to `workers` threads (the caller is
// one of them). Work is claimed dynamically; callers must write results by
// index so output order never depends on scheduling. The exception from the
// lowest failing index is rethrown after all work stops.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::size_t failed_index = count;
    std::exception_ptr error;
    auto body = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    error = std::current_exception();
                }
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const std::size_t extra = std::min(workers, count) - 1;
        pool.reserve(extra);
        for (std::size_t k = 0; k < extra; ++k) pool.emplace_back(body);
        body();
    }
    if (error) std::rethrow_exception(error);
}

inline std::size_t hardware_workers() noexcept {
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace racebook
