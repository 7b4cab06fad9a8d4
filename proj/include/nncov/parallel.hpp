#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace nncov {

/// Splits [0, n) into at most `jobs` contiguous chunks and runs `fn(chunk, begin, end)`
/// for each, one thread per chunk. Chunk boundaries depend only on `n` and `jobs`.
template <typename Fn>
void parallel_chunks(std::size_t n, unsigned jobs, Fn&& fn) {
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(jobs == 0 ? 1 : jobs, n));
    auto bounds = [&](std::size_t c) { return n * c / chunks; };
    if (chunks == 1) {
        fn(std::size_t{0}, std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        workers.emplace_back([&fn, c, b = bounds(c), e = bounds(c + 1)] { fn(c, b, e); });
    }
    for (auto& w : workers) {
        w.join();
    }
}

/// Number of chunks `parallel_chunks` will use.
inline std::size_t chunk_count(std::size_t n, unsigned jobs) {
    return std::max<std::size_t>(1, std::min<std::size_t>(jobs == 0 ? 1 : jobs, n));
}

} // namespace nncov
