#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bbs {

/// Runs fn(task) for task in [0, tasks) on up to `threads` workers. Tasks are
/// dealt out in contiguous blocks so each worker sees an ordered range.
template <typename Fn>
void parallel_blocks(std::size_t tasks, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, tasks));
    if (threads == 1) {
        fn(std::size_t{0}, tasks);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        std::size_t begin = tasks * t / threads;
        std::size_t end = tasks * (t + 1) / threads;
        workers.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace bbs
