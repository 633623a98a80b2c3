// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace cipherpix {

inline int default_thread_count() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(i) for i in [0, n). Each index must write only to its own output
// slot, which keeps results independent of scheduling and thread count.
inline void parallel_for(int64_t n, const std::function<void(int64_t)>& fn,
                         int threads = default_thread_count()) {
    if (n <= 0) {
        return;
    }
    if (threads <= 1 || n == 1) {
        for (int64_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    if (threads > n) {
        threads = static_cast<int>(n);
    }
    std::atomic<int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int64_t i = next.fetch_add(1);
                if (i >= n || failed.load()) {
                    return;
                }
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) {
                        error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace cipherpix
