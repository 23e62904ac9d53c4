#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mloz {

inline int hardware_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(i) for i in [0, nitems). Work items must write to disjoint state;
// under that contract the result is bit-identical for any thread count,
// because scheduling only changes who computes an item, not what it computes.
template <typename Fn>
void parallel_for(std::size_t nitems, int nthreads, Fn&& fn) {
    if (nitems == 0) {
        return;
    }
    if (nthreads <= 1 || nitems == 1) {
        for (std::size_t i = 0; i < nitems; ++i) {
            fn(i);
        }
        return;
    }
    std::size_t nworkers = std::min<std::size_t>(static_cast<std::size_t>(nthreads), nitems);
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= nitems) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
                next.store(nitems, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(nworkers);
    for (std::size_t t = 0; t < nworkers; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& th : pool) {
        th.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace mloz
