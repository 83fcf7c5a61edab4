#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace sbsim {

/// Run fn(i) for i in [0, n) across worker threads. Each index is handled
/// exactly once; callers keep determinism by writing only to slot i.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         std::size_t max_threads = 0) {
    std::size_t hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    std::size_t workers = max_threads == 0 ? hw : std::min(hw, max_threads);
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n;
                 i = next.fetch_add(1))
                fn(i);
        });
    for (auto& t : pool) t.join();
}

} // namespace sbsim
