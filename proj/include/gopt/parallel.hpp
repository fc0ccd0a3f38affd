#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace gopt {

// Runs fn(begin, end) over a contiguous partition of [0, count).
// Chunk boundaries depend only on (count, n_threads); workers write to
// caller-owned per-index slots, so results are identical for any thread
// count provided the caller reduces in index order.
inline void parallel_for(std::size_t count, int n_threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (count == 0) return;
    int nt = std::max(1, n_threads);
    if (nt == 1 || count == 1) {
        fn(0, count);
        return;
    }
    std::size_t chunk = (count + nt - 1) / nt;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nt));
    for (int i = 0; i < nt; ++i) {
        std::size_t b = std::min(count, static_cast<std::size_t>(i) * chunk);
        std::size_t e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back(fn, b, e);
    }
    for (auto& th : pool) th.join();
}

}  // namespace gopt
