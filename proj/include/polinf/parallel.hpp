#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace polinf {

// Runs fn(0..n_jobs-1) on up to `threads` workers. Results must be written to
// job-indexed slots by the caller, which keeps any reduction deterministic
// regardless of scheduling. threads <= 1 runs inline.
inline void parallel_for(int n_jobs, int threads, const std::function<void(int)>& fn) {
    if (n_jobs <= 0) return;
    if (threads <= 1 || n_jobs == 1) {
        for (int i = 0; i < n_jobs; ++i) fn(i);
        return;
    }
    const int workers = std::min(threads, n_jobs);
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;

    auto worker = [&] {
        while (true) {
            const int job = next.fetch_add(1);
            if (job >= n_jobs) return;
            try {
                fn(job);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n_jobs);  // drain remaining jobs
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace polinf
