#pragma once

// Minimal work-sharing loop over an index range. Each index is processed by
// exactly one worker; callers write results into per-index slots so the merge
// order never depends on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pairdyn {

inline int default_jobs() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

template <class F>
void parallel_for(std::size_t count, int jobs, F&& fn) {
    if (jobs <= 0) jobs = default_jobs();
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace pairdyn
