#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace fuzzydp {

/// Static range partition across threads. Each index is processed exactly
/// once with no shared mutable state, so results never depend on the thread
/// count or schedule.
inline void parallel_for(int n, int threads, const std::function<void(int, int)>& body) {
    if (threads <= 1 || n < 2 * threads) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(body, lo, hi);
    }
    for (auto& th : pool) th.join();
}

}  // namespace fuzzydp
