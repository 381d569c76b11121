#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace obfair {

/// Run fn(worker_index, item_index) over [0, count) on `workers` threads.
/// Each worker processes items pulled from a shared atomic counter, so
/// callers must make results independent of scheduling (index results into
/// a preallocated slot, merge by key afterwards). The first exception is
/// rethrown on the calling thread after all workers join.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(int, std::size_t)>& fn) {
    if (workers < 1) workers = 1;
    if (count == 0) return;
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(0, i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (first_error) return;
                }
                try {
                    fn(w, i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace obfair
