#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace hcd {

/// Runs fn(begin, end) over contiguous index blocks, one per worker thread.
template <typename Fn>
void parallel_blocks(std::size_t count, Fn&& fn) {
    std::size_t workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    if (workers > count) workers = count ? count : 1;
    if (workers <= 1 || count < 64) {
        fn(std::size_t(0), count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        if (begin >= count) break;
        const std::size_t end = std::min(count, begin + chunk);
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace hcd
