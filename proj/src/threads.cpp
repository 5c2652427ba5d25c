#include "funscreen/threads.hpp"

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace funscreen {

namespace {

std::size_t env_thread_cap() {
    const char* raw = std::getenv("FUNSCREEN_THREADS");
    if (raw == nullptr || *raw == '\0') return 0;
    char* end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (end == raw || *end != '\0' || v <= 0) return 0;
    return static_cast<std::size_t>(v);
}

}  // namespace

std::size_t worker_count(std::size_t jobs) {
    if (jobs <= 1) return 1;
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    const std::size_t cap = env_thread_cap();
    if (cap != 0 && cap < n) n = cap;
    return n < jobs ? n : jobs;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = worker_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace funscreen
