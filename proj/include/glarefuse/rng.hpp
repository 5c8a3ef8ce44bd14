#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace glarefuse {

// mt19937 with explicit scalar mappings; std::uniform_* distributions are
// implementation-defined, which would break cross-platform reproducibility.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed)
        : gen_(static_cast<std::uint32_t>(seed ^ (seed >> 32))) {}

    std::uint32_t next_u32() { return gen_(); }

    // [lo, hi)
    double uniform(double lo, double hi) {
        const double u = next_u32() * (1.0 / 4294967296.0);
        return lo + (hi - lo) * u;
    }

    // [lo, hi] inclusive
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u32() %
                                     static_cast<std::uint32_t>(hi - lo + 1));
    }

    bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }

private:
    std::mt19937 gen_;
};

// FNV-1a over the string, mixed with the seed. Stable across platforms.
std::uint64_t stable_hash(std::uint64_t seed, std::string_view s);

}  // namespace glarefuse
