#include "glarefuse/rng.hpp"

namespace glarefuse {

std::uint64_t stable_hash(std::uint64_t seed, std::string_view s) {
    std::uint64_t h = 14695981039346656037ull ^ (seed * 0x9E3779B97F4A7C15ull);
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace glarefuse
