#include "nnsolve/rng.hpp"

namespace nnsolve {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t Rng::bounded(std::uint64_t n) {
    // Lemire's nearly-divisionless method, 64-bit variant.
    std::uint64_t x = next();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
        std::uint64_t t = (0 - n) % n;
        while (lo < t) {
            x = next();
            m = static_cast<unsigned __int128>(x) * n;
            lo = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

} // namespace nnsolve
