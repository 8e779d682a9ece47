#pragma once

#include <cstdint>

namespace pairsel {

// SplitMix64. Used instead of <random> distributions wherever determinism is
// asserted across compilers: libstdc++/libc++ distributions are
// implementation-defined, this is not.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    // Uniform in [0, n). Modulo bias is < n / 2^64, irrelevant at our scales.
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

    // Independent stream for (seed, stream): feeds both through the mixer so
    // nearby pairs do not correlate.
    static SplitMix64 derive(std::uint64_t seed, std::uint64_t stream) {
        SplitMix64 mixer(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
        std::uint64_t s = mixer.next();
        return SplitMix64(s);
    }

private:
    std::uint64_t state_;
};

} // namespace pairsel
