#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace greenzonal {

inline unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Calls fn(i) for every i in [0, n) on up to `workers` threads. Work items
// are claimed dynamically; the first exception thrown is rethrown here.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned workers = 0) {
    if (workers == 0) workers = default_workers();
    const std::size_t nthreads = std::min<std::size_t>(workers, n);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(nthreads - 1);
        for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(body);
        body();
    }
    if (failure) std::rethrow_exception(failure);
}

// Splits [0, rows) into contiguous blocks and calls fn(row_begin, row_end)
// per block. Small jobs run inline.
template <class Fn>
void for_each_row_block(std::size_t rows, std::size_t row_len, Fn&& fn) {
    constexpr std::size_t kMinPixelsPerBlock = 1 << 16;
    const std::size_t total = rows * row_len;
    const unsigned workers = default_workers();
    if (workers <= 1 || total < 2 * kMinPixelsPerBlock || rows < 2) {
        fn(std::size_t{0}, rows);
        return;
    }
    const std::size_t blocks = std::min<std::size_t>({rows, workers * 4, total / kMinPixelsPerBlock});
    const std::size_t per = (rows + blocks - 1) / blocks;
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t begin = b * per;
        const std::size_t end = std::min(rows, begin + per);
        if (begin < end) fn(begin, end);
    }, workers);
}

} // namespace greenzonal
