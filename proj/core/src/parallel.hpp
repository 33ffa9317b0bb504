#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace canopy::detail {

// Static row partitioning. Each row is processed by exactly one worker with
// the same per-row arithmetic as the sequential loop, so results are
// bit-identical for any thread count.
template <typename Fn>
void parallel_rows(int rows, int threads, Fn&& fn) {
    threads = std::max(1, std::min(threads, rows));
    if (threads == 1) {
        for (int r = 0; r < rows; ++r) fn(r);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(threads);
    const int chunk = (rows + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int begin = t * chunk;
        const int end = std::min(rows, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([begin, end, &fn] {
            for (int r = begin; r < end; ++r) fn(r);
        });
    }
    for (auto& w : workers) w.join();
}

} // namespace canopy::detail
