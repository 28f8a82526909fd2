#pragma once

#include <cstdint>
#include <initializer_list>

namespace scengen::rng {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based draw: a pure function of the seed and the coordinates, so
/// results do not depend on iteration order or thread scheduling.
constexpr std::uint64_t at(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = mix(seed);
    for (auto c : coords) h = mix(h ^ mix(c + 0x632be59bd9b4e019ULL));
    return h;
}

/// Uniform in the open interval (0, 1) from the top 53 bits.
constexpr double open01(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by multiply-shift.
inline std::uint64_t below(std::uint64_t bits, std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits) * n) >> 64);
}

/// Sequential stream for the few places that need one (restart initial graphs).
class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() { return mix(state_++); }
    double uniform() { return open01(next()); }
    std::uint64_t below(std::uint64_t n) { return rng::below(next(), n); }

private:
    std::uint64_t state_;
};

}  // namespace scengen::rng
