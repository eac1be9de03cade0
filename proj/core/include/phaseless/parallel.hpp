#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace phaseless {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be written to
// per-index slots so the outcome does not depend on scheduling. The first exception
// (lowest index) is rethrown.
template <class Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
    const size_t workers = std::min<size_t>(std::max(threads, 1), n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::mutex mu;
    size_t failed_at = n;
    std::exception_ptr failure;
    auto work = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace phaseless
