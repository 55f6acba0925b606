#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace advforge {

// Worker count: ADV_FORGE_THREADS if set (clamped to [1, 64]), otherwise the
// hardware concurrency.
inline int worker_count() {
    if (const char* env = std::getenv("ADV_FORGE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return std::min(n, 64);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

// Runs fn(i) for i in [0, n) across worker_count() threads with static
// chunking. Each index must write only its own output slot, so results are
// identical for any thread count; callers reduce in index order afterwards.
template <typename Fn>
void parallel_for(size_t n, Fn&& fn) {
    const int workers = std::min<size_t>(worker_count(), n == 0 ? 1 : n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const size_t chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        const size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace advforge
