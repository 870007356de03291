#include "nnsolve/grid.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "nnsolve/errors.hpp"

namespace nnsolve {

std::string u128_to_string(u128 v) {
    if (v == 0) return "0";
    std::string s;
    while (v != 0) {
        s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    std::reverse(s.begin(), s.end());
    return s;
}

namespace {

void check_shape(std::int64_t N, int d) {
    if (N < 1) throw ParamError("grid: points-per-dim must be >= 1, got " + std::to_string(N));
    if (d < 1) throw ParamError("grid: dimension must be >= 1, got " + std::to_string(d));
}

} // namespace

FlatIndex zeta(std::span<const std::int32_t> idx, std::int64_t N, int d) {
    check_shape(N, d);
    if (static_cast<int>(idx.size()) != d)
        throw ParamError("zeta: index has " + std::to_string(idx.size()) + " entries, expected " + std::to_string(d));
    const auto uN = static_cast<u128>(N);
    u128 v = 0;
    for (int k = 0; k < d; ++k) {
        const std::int32_t ik = idx[k];
        if (ik < 1 || ik > N)
            throw RangeError("zeta: entry " + std::to_string(k + 1) + " = " + std::to_string(ik) +
                             " outside [1, " + std::to_string(N) + "]");
        u128 t;
        if (__builtin_mul_overflow(v, uN, &t) ||
            __builtin_add_overflow(t, static_cast<u128>(ik - 1), &v))
            throw RangeError("zeta: flat index exceeds 128-bit range for N=" + std::to_string(N) +
                             ", d=" + std::to_string(d));
    }
    u128 out;
    if (__builtin_add_overflow(v, static_cast<u128>(1), &out))
        throw RangeError("zeta: flat index exceeds 128-bit range");
    return FlatIndex{out};
}

MultiIndex unzeta(FlatIndex flat, std::int64_t N, int d) {
    check_shape(N, d);
    if (flat.value < 1)
        throw RangeError("unzeta: flat index must be >= 1");
    const auto uN = static_cast<u128>(N);
    u128 rem = flat.value - 1;
    MultiIndex idx(static_cast<std::size_t>(d));
    for (int k = d - 1; k >= 0; --k) {
        idx[static_cast<std::size_t>(k)] = static_cast<std::int32_t>(rem % uN) + 1;
        rem /= uN;
    }
    if (rem != 0)
        throw RangeError("unzeta: flat index " + u128_to_string(flat.value) + " exceeds N^d for N=" +
                         std::to_string(N) + ", d=" + std::to_string(d));
    return idx;
}

u128 grid_size(std::int64_t N, int d) {
    check_shape(N, d);
    const auto uN = static_cast<u128>(N);
    u128 v = 1;
    for (int k = 0; k < d; ++k)
        if (__builtin_mul_overflow(v, uN, &v))
            throw RangeError("grid_size: N^d exceeds 128-bit range for N=" + std::to_string(N) +
                             ", d=" + std::to_string(d));
    return v;
}

std::int64_t GridSpec::points_per_dim() const {
    if (coords.empty()) throw ParamError("grid: empty spec");
    const std::size_t n = coords.front().size();
    for (const auto& c : coords)
        if (c.size() != n) throw ParamError("grid: per-dimension point counts differ");
    return static_cast<std::int64_t>(n);
}

void GridSpec::point_of(std::span<const std::int32_t> idx, std::span<double> out) const {
    if (static_cast<int>(idx.size()) != d || static_cast<int>(out.size()) != d)
        throw ParamError("point_of: index/output length must equal dimension");
    for (int k = 0; k < d; ++k) {
        const auto& ck = coords[static_cast<std::size_t>(k)];
        const std::int32_t ik = idx[k];
        if (ik < 1 || ik > static_cast<std::int64_t>(ck.size()))
            throw RangeError("point_of: entry " + std::to_string(k + 1) + " = " + std::to_string(ik) +
                             " outside [1, " + std::to_string(ck.size()) + "]");
        out[k] = ck[static_cast<std::size_t>(ik - 1)];
    }
}

std::vector<double> GridSpec::point_of(const MultiIndex& idx) const {
    std::vector<double> out(static_cast<std::size_t>(d));
    point_of(std::span<const std::int32_t>(idx), std::span<double>(out));
    return out;
}

GridSpec make_interior_uniform_grid(int d, std::int64_t N, double lo, double hi) {
    check_shape(N, d);
    if (!(lo < hi)) throw ParamError("grid: bounds must satisfy lo < hi");
    const double h = (hi - lo) / static_cast<double>(N + 1);
    std::vector<double> c(static_cast<std::size_t>(N));
    for (std::int64_t i = 1; i <= N; ++i)
        c[static_cast<std::size_t>(i - 1)] = lo + static_cast<double>(i) * h;
    GridSpec g;
    g.d = d;
    g.coords.assign(static_cast<std::size_t>(d), c);
    g.lo.assign(static_cast<std::size_t>(d), lo);
    g.hi.assign(static_cast<std::size_t>(d), hi);
    g.h = h;
    return g;
}

GridSpec make_closed_uniform_grid(int d, std::int64_t N, double lo, double hi) {
    check_shape(N, d);
    if (N < 2) throw ParamError("grid: closed uniform grid needs N >= 2");
    if (!(lo < hi)) throw ParamError("grid: bounds must satisfy lo < hi");
    const double h = (hi - lo) / static_cast<double>(N - 1);
    std::vector<double> c(static_cast<std::size_t>(N));
    for (std::int64_t i = 1; i <= N; ++i)
        c[static_cast<std::size_t>(i - 1)] = lo + static_cast<double>(i - 1) * h;
    GridSpec g;
    g.d = d;
    g.coords.assign(static_cast<std::size_t>(d), c);
    g.lo.assign(static_cast<std::size_t>(d), lo);
    g.hi.assign(static_cast<std::size_t>(d), hi);
    g.h = h;
    return g;
}

GridSpec make_explicit_grid(int d, std::vector<std::vector<double>> per_dim_coords) {
    if (d < 1) throw ParamError("grid: dimension must be >= 1");
    if (static_cast<int>(per_dim_coords.size()) != d)
        throw ParamError("grid: expected " + std::to_string(d) + " coordinate lists, got " +
                         std::to_string(per_dim_coords.size()));
    GridSpec g;
    g.d = d;
    g.lo.resize(static_cast<std::size_t>(d));
    g.hi.resize(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        const auto& c = per_dim_coords[static_cast<std::size_t>(k)];
        if (c.empty()) throw ParamError("grid: empty coordinate list in dimension " + std::to_string(k + 1));
        for (std::size_t i = 0; i + 1 < c.size(); ++i)
            if (!(c[i] < c[i + 1]))
                throw ParamError("grid: coordinates not strictly increasing in dimension " + std::to_string(k + 1));
        for (double x : c)
            if (!std::isfinite(x)) throw ParamError("grid: non-finite coordinate in dimension " + std::to_string(k + 1));
        g.lo[static_cast<std::size_t>(k)] = c.front();
        g.hi[static_cast<std::size_t>(k)] = c.back();
    }
    g.coords = std::move(per_dim_coords);
    return g;
}

GridSpec make_explicit_grid(int d, std::vector<double> coords) {
    std::vector<std::vector<double>> per_dim(static_cast<std::size_t>(d > 0 ? d : 0), coords);
    if (d >= 1) per_dim.back() = std::move(coords);
    return make_explicit_grid(d, std::move(per_dim));
}

std::vector<MultiIndex> sample_indices(Rng& rng, std::int64_t count, std::int64_t N, int d) {
    check_shape(N, d);
    if (count < 1) throw ParamError("sample_indices: count must be >= 1");
    std::vector<MultiIndex> out(static_cast<std::size_t>(count));
    for (auto& idx : out) {
        idx.resize(static_cast<std::size_t>(d));
        sample_indices_flat(rng, 1, N, d, idx.data());
    }
    return out;
}

void sample_indices_flat(Rng& rng, std::int64_t count, std::int64_t N, int d, std::int32_t* out) {
    const auto uN = static_cast<std::uint64_t>(N);
    const std::int64_t total = count * d;
    for (std::int64_t i = 0; i < total; ++i)
        out[i] = static_cast<std::int32_t>(rng.bounded(uN)) + 1;
}

} // namespace nnsolve
