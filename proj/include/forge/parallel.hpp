#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace forge {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n). Each index must be independent and write only
// its own output slot; results are then identical for any thread count.
// Worker count is capped at the hardware concurrency: oversubscribing a
// pure CPU-bound loop only adds scheduling overhead, never changes results.
template <typename Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
    threads = std::min(resolve_threads(threads), resolve_threads(0));
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    size_t workers = std::min<size_t>(static_cast<size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                // Static block partition keeps per-index work order-free.
                size_t begin = n * w / workers;
                size_t end = n * (w + 1) / workers;
                for (size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> guard(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Order-fixed compensated (Kahan) sum; worker-count independent because the
// inputs are gathered first and reduced serially.
inline double kahan_sum(const std::vector<double>& values) {
    double sum = 0.0, c = 0.0;
    for (double v : values) {
        double y = v - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace forge
