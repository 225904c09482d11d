#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "levygreen/types.hpp"

namespace levygreen {

// LEVYGREEN_WORKERS if set and positive, else the hardware concurrency.
int default_workers();
int resolve_workers(int requested);

// Stream identifiers keep experiments that share a seed independent.
std::uint64_t stream_id(std::uint64_t tag, std::uint64_t index);

// Splits n items into blocks of `block` items. Block b draws from
// make_rng(seed, stream_id(tag, b)) and its result lands in slot b, so the
// output does not depend on the worker count.
//   Result body(long first, long count, Rng& rng)
template <class Result, class Body>
std::vector<Result> run_blocks(long n, long block, std::uint64_t seed, std::uint64_t tag, int workers, Body&& body)
{
    block = std::max(1L, block);
    const long nblocks = (n + block - 1) / block;
    std::vector<Result> out(static_cast<std::size_t>(nblocks));
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto work = [&]() {
        while (true) {
            const long b = next.fetch_add(1);
            if (b >= nblocks)
                return;
            try {
                Rng rng = make_rng(seed, stream_id(tag, static_cast<std::uint64_t>(b)));
                const long first = b * block;
                out[static_cast<std::size_t>(b)] = body(first, std::min(block, n - first), rng);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error)
                    error = std::current_exception();
                next.store(nblocks);
            }
        }
    };
    const int w = std::min<long>(resolve_workers(workers), std::max(1L, nblocks));
    if (w <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < w; ++i)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    if (error)
        std::rethrow_exception(error);
    return out;
}

// Same fan-out for deterministic tasks indexed 0..n-1.
template <class Body>
void parallel_for(long n, int workers, Body&& body)
{
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto work = [&]() {
        while (true) {
            const long i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error)
                    error = std::current_exception();
                next.store(n);
            }
        }
    };
    const int w = std::min<long>(resolve_workers(workers), std::max(1L, n));
    if (w <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < w; ++i)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    if (error)
        std::rethrow_exception(error);
}

}  // namespace levygreen
