#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nnsolve/rng.hpp"

namespace nnsolve {

/// 1-based multi-index (i_1, ..., i_d), entry k in [1, N_k].
using MultiIndex = std::vector<std::int32_t>;

using u128 = unsigned __int128;

std::string u128_to_string(u128 v);

/// 1-based lexicographic position of a multi-index; needs 128 bits because
/// grid sizes reach N^d = 10^24 and 2^100.
struct FlatIndex {
    u128 value = 0;

    std::string to_string() const { return u128_to_string(value); }

    friend bool operator==(FlatIndex a, FlatIndex b) { return a.value == b.value; }
    friend bool operator!=(FlatIndex a, FlatIndex b) { return a.value != b.value; }
    friend bool operator<(FlatIndex a, FlatIndex b) { return a.value < b.value; }
    friend bool operator<=(FlatIndex a, FlatIndex b) { return a.value <= b.value; }
};

/// zeta(i) = sum_k (i_k - 1) N^{d-k} + 1. Throws RangeError if the result
/// would exceed 128 bits; never wraps silently.
FlatIndex zeta(std::span<const std::int32_t> idx, std::int64_t N, int d);

/// Inverse of zeta. Throws RangeError unless 1 <= flat <= N^d.
MultiIndex unzeta(FlatIndex flat, std::int64_t N, int d);

/// N^d as a 128-bit value; RangeError on overflow.
u128 grid_size(std::int64_t N, int d);

/// Cartesian tensor grid on a box: per-dimension strictly increasing
/// coordinates plus the declared bounds they must lie in.
struct GridSpec {
    int d = 0;
    std::vector<std::vector<double>> coords;
    std::vector<double> lo;
    std::vector<double> hi;
    double h = 0.0; // uniform spacing when the factory defines one, else 0

    /// Points per dimension; requires every dimension to have the same count.
    std::int64_t points_per_dim() const;

    u128 size() const { return grid_size(points_per_dim(), d); }

    /// Writes (x_{i_1}, ..., x_{i_d}) into out. Throws RangeError on a bad index.
    void point_of(std::span<const std::int32_t> idx, std::span<double> out) const;

    std::vector<double> point_of(const MultiIndex& idx) const;
};

/// Interior uniform grid: x_i = lo + i*h, h = (hi-lo)/(N+1), endpoints excluded.
GridSpec make_interior_uniform_grid(int d, std::int64_t N, double lo, double hi);

/// Closed uniform grid: x_i = lo + (i-1)*(hi-lo)/(N-1), endpoints included; N >= 2.
GridSpec make_closed_uniform_grid(int d, std::int64_t N, double lo, double hi);

/// Wraps explicit per-dimension coordinates verbatim; each list must be
/// nonempty and strictly increasing.
GridSpec make_explicit_grid(int d, std::vector<std::vector<double>> per_dim_coords);

/// Same coordinate list replicated across all d dimensions.
GridSpec make_explicit_grid(int d, std::vector<double> coords);

/// count multi-indices, each coordinate uniform on {1..N}, with replacement.
std::vector<MultiIndex> sample_indices(Rng& rng, std::int64_t count, std::int64_t N, int d);

/// Hot-path variant: writes count*d entries row-major into out.
void sample_indices_flat(Rng& rng, std::int64_t count, std::int64_t N, int d, std::int32_t* out);

} // namespace nnsolve
