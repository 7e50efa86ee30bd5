#pragma once

// Replication loops over a fixed partition of the index space. Every replication writes its own
// output slot, so results do not depend on the number of threads.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rsmolyak {

inline unsigned default_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

/// Calls fn(r) for r in [0, count) on up to `threads` workers. Work is handed out in fixed chunks.
/// The first exception thrown by any worker is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::uint64_t count, unsigned threads, Fn&& fn) {
    if (count == 0) return;
    constexpr std::uint64_t kChunks = 64;
    const std::uint64_t chunk = std::max<std::uint64_t>(1, (count + kChunks - 1) / kChunks);
    const std::uint64_t n_chunks = (count + chunk - 1) / chunk;
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_chunks)));

    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (!failed.load()) {
            const std::uint64_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            try {
                for (std::uint64_t r = c * chunk; r < std::min(count, (c + 1) * chunk); ++r) fn(r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace rsmolyak
