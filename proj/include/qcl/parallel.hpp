#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace qcl {

// Runs fn(i) for i in [0, n) on up to n_threads workers. Each index writes to
// its own output slot, so the result is independent of scheduling; any
// reduction over the slots must happen sequentially afterwards.
template <typename Fn>
void parallel_for(std::size_t n, int n_threads, Fn&& fn) {
    if (n == 0) return;
    std::size_t workers = n_threads > 0 ? static_cast<std::size_t>(n_threads) : 1;
    if (workers > n) workers = n;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = n * w / workers;
        std::size_t hi = n * (w + 1) / workers;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

inline int default_threads() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace qcl
