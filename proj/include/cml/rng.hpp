#pragma once

#include <cstdint>

namespace cml {

// Counter-based random numbers: every draw is a pure hash of
// (seed, replicate, step, stream, index), so results never depend on
// scheduling or worker count.  Streams keep distinct draw families apart
// (0 = initial sampling, 1 = resampling offset, 2 = clone jitter, 3 = word
// sampling).

inline std::uint64_t split_mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t keyed_bits(std::uint64_t seed, std::uint32_t replicate,
                                std::uint32_t step, std::uint32_t stream,
                                std::uint64_t index) {
    std::uint64_t h = split_mix(seed);
    h = split_mix(h ^ ((static_cast<std::uint64_t>(replicate) << 32) | step));
    h = split_mix(h ^ stream);
    h = split_mix(h ^ index);
    return h;
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double keyed_uniform(std::uint64_t seed, std::uint32_t replicate,
                            std::uint32_t step, std::uint32_t stream,
                            std::uint64_t index) {
    return uniform01(keyed_bits(seed, replicate, step, stream, index));
}

} // namespace cml
