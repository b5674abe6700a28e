#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace specsplit {

namespace detail {

inline std::atomic<unsigned>& thread_cap()
{
    static std::atomic<unsigned> cap{0};
    return cap;
}

} // namespace detail

/// Worker count used by parallel_map. An explicit cap wins; otherwise
/// SPECSPLIT_THREADS, otherwise the hardware concurrency.
inline unsigned max_threads()
{
    if (unsigned cap = detail::thread_cap().load(); cap > 0) {
        return cap;
    }
    if (const char* env = std::getenv("SPECSPLIT_THREADS")) {
        try {
            int v = std::stoi(env);
            if (v > 0) {
                return static_cast<unsigned>(v);
            }
        } catch (const std::exception&) {
            // ignore malformed values
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline void set_max_threads(unsigned n) { detail::thread_cap().store(n); }

/// Evaluates fn(0..count-1) on a worker pool. Result i is always fn(i), so
/// the output is independent of scheduling. The first exception (by index)
/// is rethrown after all workers finish.
template <typename Fn>
auto parallel_map(std::size_t count, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>>
{
    using R = std::invoke_result_t<Fn&, std::size_t>;
    std::vector<R> out(count);
    const std::size_t workers = std::min<std::size_t>(max_threads(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            out[i] = fn(i);
        }
        return out;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) {
            pool.emplace_back(work);
        }
        work();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

/// Pairwise (tree) sum in a fixed association order.
template <typename T>
T tree_sum(std::vector<T> values)
{
    if (values.empty()) {
        return T{};
    }
    while (values.size() > 1) {
        std::size_t half = (values.size() + 1) / 2;
        for (std::size_t i = 0; i + half < values.size(); ++i) {
            values[i] = values[i] + values[i + half];
        }
        values.resize(half);
    }
    return values.front();
}

} // namespace specsplit
