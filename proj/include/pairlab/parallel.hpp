#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "pairlab/rng.hpp"

namespace pairlab {

// requested <= 0 means "use the hardware", capped by the number of items.
inline int resolve_threads(int requested, std::size_t work_items) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    std::size_t t = requested > 0 ? static_cast<std::size_t>(requested)
                                  : static_cast<std::size_t>(hw);
    if (t > work_items) t = work_items;
    if (t < 1) t = 1;
    return static_cast<int>(t);
}

// Runs fn(i) for i in [0, count). Work items are claimed through an atomic
// counter, so results must be written to per-index slots; the first worker
// exception is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (count == 0) return;
    int t = resolve_threads(threads, count);
    if (t == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    for (int w = 0; w < t; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load(std::memory_order_relaxed)) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Fixed partition of `draws` into chunks that depends only on `draws`, so
// accumulation is bit-identical for any worker count. Chunk c runs its own
// generator seeded from child_seed(seed, c); per-chunk partial sums are
// reduced in chunk order.
struct McChunkTable {
    std::vector<std::vector<double>> sums;  // one vector of dims per chunk
    std::vector<std::size_t> counts;

    std::vector<double> totals() const {
        std::vector<double> out;
        if (sums.empty()) return out;
        out.assign(sums[0].size(), 0.0);
        for (const auto& chunk : sums)
            for (std::size_t k = 0; k < chunk.size(); ++k) out[k] += chunk[k];
        return out;
    }
};

// fn(rng, n_draws, sums) accumulates n_draws samples into sums (size dims).
template <class Fn>
McChunkTable mc_chunks(std::size_t draws, std::size_t dims, std::uint64_t seed, int threads,
                       Fn&& fn) {
    std::size_t n_chunks = draws / 4096;
    if (n_chunks < 1) n_chunks = 1;
    if (n_chunks > 256) n_chunks = 256;

    McChunkTable table;
    table.sums.assign(n_chunks, std::vector<double>(dims, 0.0));
    table.counts.assign(n_chunks, 0);
    std::size_t base = draws / n_chunks;
    std::size_t extra = draws % n_chunks;
    for (std::size_t c = 0; c < n_chunks; ++c) table.counts[c] = base + (c < extra ? 1 : 0);

    parallel_for(n_chunks, threads, [&](std::size_t c) {
        SplitMix64 rng(SplitMix64::child_seed(seed, c));
        fn(rng, table.counts[c], table.sums[c]);
    });
    return table;
}

}  // namespace pairlab
