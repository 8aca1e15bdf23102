// pool.hpp: worker pool for independent sweep points

#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace sct::bench {

inline constexpr const char* kThreadsEnv = "SCT_THREADS";

/// SCT_THREADS when set to a positive integer, else the hardware concurrency (at least 1).
inline unsigned default_thread_count() {
    if (const char* env = std::getenv(kThreadsEnv)) {
        unsigned n = 0;
        const std::string s(env);
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
        if (ec == std::errc() && p == s.data() + s.size() && n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates f(0..n-1) on up to `threads` workers; results come back in index order.
/// The first exception by index is rethrown after all workers finish.
template <class F>
auto parallel_map(std::size_t n, unsigned threads, F f) -> std::vector<decltype(f(std::size_t{0}))> {
    using R = decltype(f(std::size_t{0}));
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(f(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n_workers = static_cast<std::size_t>(std::max(1u, threads));
    if (n_workers == 1 || n <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(n_workers, n); ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

} // namespace sct::bench
