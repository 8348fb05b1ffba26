#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wdb {

inline std::size_t default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// out[i] = fn(i) for i in [0, count), on up to `threads` workers. Each index
// is computed independently, so the result does not depend on the worker
// count or on scheduling.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, std::size_t threads, Fn&& fn) {
    std::vector<T> out(count);
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    threads = std::min(threads, count);
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                const std::size_t begin = count * w / threads;
                const std::size_t end = count * (w + 1) / threads;
                for (std::size_t i = begin; i < end; ++i) out[i] = fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace wdb
