#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace spinhjb {

/// Runs body(begin, end, worker) over [0, count) split into contiguous
/// chunks, one per worker. The first exception thrown by any worker is
/// rethrown on the calling thread.
template <typename Body>
void parallel_chunks(std::size_t count, unsigned threads, Body&& body) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
    if (workers == 1) {
        body(std::size_t{0}, count, 0U);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = count * w / workers;
            const std::size_t end = count * (w + 1) / workers;
            pool.emplace_back([&, begin, end, w] {
                try {
                    body(begin, end, static_cast<unsigned>(w));
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Pairwise (tree) summation in index order; independent of scheduling.
inline double tree_sum(std::span<const double> v) {
    if (v.empty()) return 0.0;
    if (v.size() == 1) return v[0];
    const std::size_t half = v.size() / 2;
    return tree_sum(v.first(half)) + tree_sum(v.subspan(half));
}

}  // namespace spinhjb
