#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace pf {

// Runs fn(i) for i in [0, n). Each index owns its outputs, so results are
// identical for any thread count; callers do any reduction afterwards in
// fixed index order.
template <typename Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const size_t workers = std::min<size_t>(static_cast<size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t]() {
            for (size_t i = t; i < n; i += workers) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace pf
