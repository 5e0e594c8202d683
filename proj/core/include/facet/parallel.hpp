#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace facet {

// Applies fn(item, index) across items with up to `workers` threads. Results
// land in per-index slots, so the output order never depends on scheduling.
// The first thrown exception (lowest index) is rethrown after all workers
// finish.
template <typename T, typename Fn>
auto parallel_map(const std::vector<T>& items, int workers, Fn fn)
    -> std::vector<std::invoke_result_t<Fn&, const T&, std::size_t>> {
    using R = std::invoke_result_t<Fn&, const T&, std::size_t>;
    std::vector<std::optional<R>> slots(items.size());
    if (items.empty()) return {};

    std::size_t thread_count =
        std::min<std::size_t>(items.size(), static_cast<std::size_t>(std::max(workers, 1)));
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_index = items.size();
    std::exception_ptr error;

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            try {
                slots[i] = fn(items[i], i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };

    if (thread_count == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(thread_count);
        for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
        for (auto& thread : threads) thread.join();
    }
    if (error) std::rethrow_exception(error);

    std::vector<R> out;
    out.reserve(items.size());
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
}

} // namespace facet
