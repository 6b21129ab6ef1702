#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace coxflux {

// Replications are grouped into fixed-size blocks. Each block is reduced
// sequentially in index order and block partials are folded in block order,
// so the result is bit-identical for any worker count.
inline constexpr std::size_t kReplicationBlock = 1024;

template <class T, class BlockFn, class Combine>
T blocked_reduce(std::size_t count, unsigned workers, T init, BlockFn block_fn, Combine combine) {
    const std::size_t nblocks = (count + kReplicationBlock - 1) / kReplicationBlock;
    std::vector<T> partial(nblocks, init);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto run = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            const std::size_t lo = b * kReplicationBlock;
            const std::size_t hi = std::min(count, lo + kReplicationBlock);
            try {
                partial[b] = block_fn(lo, hi);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next.store(nblocks);
                return;
            }
        }
    };

    const unsigned nthreads =
        static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(nblocks, 1)));
    if (nthreads <= 1) {
        run();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(nthreads);
        for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(run);
    }
    if (failure) std::rethrow_exception(failure);

    T acc = init;
    for (auto& p : partial) acc = combine(std::move(acc), std::move(p));
    return acc;
}

// Runs fn(i) for i in [0, count) and stores the results by index.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, unsigned workers, Fn fn) {
    std::vector<T> out(count);
    blocked_reduce<int>(
        count, workers, 0,
        [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) out[i] = fn(i);
            return 0;
        },
        [](int a, int) { return a; });
    return out;
}

// Worker count from an explicit flag, else COXFLUX_WORKERS, else 1.
unsigned resolve_workers(int flag_value);

}  // namespace coxflux
