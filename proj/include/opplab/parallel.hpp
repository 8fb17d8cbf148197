#pragma once

// Indexed worker pool for replication-parallel work. Determinism contract:
// fn(i) may only write state owned by index i, and callers reduce the indexed
// results in index order afterwards, so the thread count never changes output
// bytes. A worker exception stops new task pickup and is rethrown after join;
// slots already written stay valid (the "partial results" the experiment
// layer preserves).

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace opplab {

inline unsigned effective_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

inline void run_indexed(std::size_t count, unsigned threads,
                        const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    const std::size_t want = effective_threads(threads);
    const std::size_t t = want < count ? want : count;
    if (t <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (std::size_t w = 0; w < t; ++w) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace opplab
