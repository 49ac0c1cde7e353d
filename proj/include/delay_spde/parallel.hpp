#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace delay_spde {

inline int worker_count() {
    if (const char* env = std::getenv("DELAY_SPDE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Static block partition over [0, n); each index owns its output slot, so the
/// result is identical for any worker count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const int workers = std::min<std::size_t>(worker_count(), n == 0 ? 1 : n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = static_cast<std::size_t>(w); i < n;
                 i += static_cast<std::size_t>(workers))
                body(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace delay_spde
