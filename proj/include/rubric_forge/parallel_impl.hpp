#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace rubric_forge {

/// Order-preserving parallel map. Record-level failures should be captured in
/// the result type by fn; an exception that does escape fn (provider
/// exhaustion) stops scheduling and is rethrown on the calling thread.
template <typename In, typename Fn>
auto parallel_map_ordered(const std::vector<In>& items, Fn fn, int workers)
    -> std::vector<std::invoke_result_t<Fn, const In&, std::size_t>> {
    using Out = std::invoke_result_t<Fn, const In&, std::size_t>;
    std::vector<Out> results(items.size());
    if (items.empty()) return results;
    workers = std::max(1, std::min<int>(workers, static_cast<int>(items.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < items.size(); ++i) results[i] = fn(items[i], i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                std::size_t i = next.fetch_add(1);
                if (i >= items.size()) return;
                try {
                    results[i] = fn(items[i], i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

}  // namespace rubric_forge
