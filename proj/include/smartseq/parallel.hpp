#pragma once
// Minimal data-parallel helper. Work items write to pre-sized slots indexed
// by item id, so results are identical for any thread count.

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace smartseq {

// Resolves a requested worker count: n >= 1 is taken as-is, n == 0 means
// "auto" (hardware concurrency), and the SMARTSEQ_THREADS environment
// variable is consulted when no explicit request is given (request < 0).
inline int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (requested < 0) {
        if (const char* env = std::getenv("SMARTSEQ_THREADS")) {
            const int n = std::atoi(env);
            if (n > 0) return n;
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    if (n <= 0) return;
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace smartseq
