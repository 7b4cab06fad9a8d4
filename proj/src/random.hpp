#pragma once

#include <cstdint>
#include <random>

namespace nncov::detail {

// Uniform integer in [0, bound) by rejection; independent of the standard library's
// distribution implementation so samples are reproducible across toolchains.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) {
            return r % bound;
        }
    }
}

} // namespace nncov::detail
