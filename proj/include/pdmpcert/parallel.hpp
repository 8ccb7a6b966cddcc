#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pdmpcert {

/// 0 means "all hardware threads".
int resolve_threads(int requested);

/// SplitMix64 finalizer; derives independent stream seeds from (base, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Calls body(k) for k in [0, n) on up to `threads` workers. Each index is
/// handled exactly once, so results written to slot k are deterministic no
/// matter how work is scheduled. The first exception is rethrown.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
    const auto workers = static_cast<std::size_t>(resolve_threads(threads));
    if (workers <= 1 || n <= 1) {
        for (std::size_t k = 0; k < n; ++k) body(k);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const std::size_t used = workers < n ? workers : n;
    pool.reserve(used);
    for (std::size_t w = 0; w < used; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t k = w; k < n; k += used) {
                try {
                    body(k);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace pdmpcert
