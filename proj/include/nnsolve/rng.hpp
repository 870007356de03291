#pragma once

#include <cstdint>
#include <random>

namespace nnsolve {

/// Independent random streams derived from one user-visible seed.
/// Keeping streams separate means e.g. drawing extra test points never
/// perturbs the training batch sequence produced by the same seed.
enum class RngStream : std::uint64_t {
    Init  = 0x9e3779b97f4a7c15ull,
    Batch = 0xbf58476d1ce4e5b9ull,
    Test  = 0x94d049bb133111ebull,
    Scan  = 0xd6e8feb86659fd93ull,
};

/// splitmix64 step; used to decorrelate (seed, stream) pairs before
/// handing them to the mt19937_64 seed.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

class Rng {
public:
    Rng(std::uint64_t seed, RngStream stream)
        : engine_(splitmix64(seed ^ static_cast<std::uint64_t>(stream))) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0,1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo,hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased integer in [0,n), n >= 1 (Lemire's method).
    std::uint64_t bounded(std::uint64_t n);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace nnsolve
