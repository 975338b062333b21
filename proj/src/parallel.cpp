// SPDX-License-Identifier: Apache-2.0

#include "s2o/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace s2o {

std::size_t max_threads() {
    if (const char* env = std::getenv("S2O_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) {
            return static_cast<std::size_t>(v);
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw >= 1 ? hw : 1;
}

void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& fn) {
    if (count <= 0) {
        return;
    }
    const std::size_t workers =
        std::min<std::size_t>(max_threads(), static_cast<std::size_t>(count));
    if (workers <= 1) {
        for (std::int64_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }

    std::mutex err_mtx;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::int64_t lo = static_cast<std::int64_t>(
            (static_cast<std::size_t>(count) * w) / workers);
        const std::int64_t hi = static_cast<std::int64_t>(
            (static_cast<std::size_t>(count) * (w + 1)) / workers);
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::int64_t i = lo; i < hi; ++i) {
                    fn(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mtx);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace s2o
