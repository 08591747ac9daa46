#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace lrfhss {

// LRFHSS_WORKERS overrides the hardware thread count
inline int worker_count()
{
    if (const char* s = std::getenv("LRFHSS_WORKERS")) {
        try {
            const int n = std::stoi(s);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// fn(i) for i in [0, n); each index runs exactly once, results go wherever fn puts them
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, int workers = 0)
{
    if (workers <= 0) workers = worker_count();
    workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next++;
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lk(mu);
                    if (!err) err = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace lrfhss
