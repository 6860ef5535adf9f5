#pragma once

#include <cstdint>

namespace cospec {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stateless counter-based uniform in [0,1). Each (seed, sample, cell) triple
// maps to one draw, so ensemble sample k is a pure function of (seed, k)
// independent of evaluation order.
inline double counter_uniform(std::uint64_t seed, std::uint64_t sample, std::uint64_t cell) {
    std::uint64_t h = splitmix64(seed ^ ((sample + 1) * 0xd1b54a32d192ed03ULL));
    h = splitmix64(h ^ ((cell + 1) * 0x8cb92ba72f3d8dd7ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

} // namespace cospec
