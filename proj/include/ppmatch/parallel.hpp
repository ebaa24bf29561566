#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ppmatch {

// Runs job(i) for i in [0, n) on `workers` threads. Jobs must be independent;
// callers write results into preallocated slots so aggregation order (and
// therefore output) is identical for any worker count.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job) {
    if (n == 0) return;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                job(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(workers)));
    pool.reserve(count);
    for (int w = 0; w < count; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace ppmatch
