#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace y00lab {

/// Run body(i) for i in [0, count) on up to `workers` threads. Work items are
/// handed out dynamically; callers must make body(i) depend on i only.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body)
{
    workers = std::max(1u, workers);
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                    if (i >= count)
                        return;
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure)
                            failure = std::current_exception();
                        next.store(count);
                        return;
                    }
                }
            });
        }
    }
    if (failure)
        std::rethrow_exception(failure);
}

/// Fixed-chunk reduction. The chunk layout depends only on `count` and
/// `chunk_size`, and partial results are combined in chunk order, so the
/// result is bit-identical for any worker count.
template <class Acc, class ChunkFn, class Combine>
Acc chunked_reduce(std::size_t count, std::size_t chunk_size, unsigned workers,
                   ChunkFn&& chunk_fn, Combine&& combine, Acc init = Acc{})
{
    chunk_size = std::max<std::size_t>(1, chunk_size);
    const std::size_t chunks = (count + chunk_size - 1) / chunk_size;
    std::vector<Acc> partial(chunks);
    parallel_for(chunks, workers, [&](std::size_t c) {
        const std::size_t begin = c * chunk_size;
        const std::size_t end = std::min(count, begin + chunk_size);
        partial[c] = chunk_fn(begin, end);
    });
    for (auto& p : partial)
        init = combine(std::move(init), p);
    return init;
}

} // namespace y00lab
