#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "nnsolve/fnn.hpp"
#include "nnsolve/rng.hpp"
#include "nnsolve/row_oracle.hpp"

namespace nnsolve::testutil {

using RowMap = std::map<u128, double>;

inline RowMap row_as_map(const RowBuffer& row, std::int64_t N, int d) {
    RowMap m;
    for (std::size_t e = 0; e < row.size(); ++e) m[zeta(row.col(e), N, d).value] = row.val(e);
    return m;
}

inline RowMap dense_row_as_map(const double* row, std::int64_t n) {
    RowMap m;
    for (std::int64_t c = 0; c < n; ++c)
        if (row[c] != 0.0) m[static_cast<u128>(c + 1)] = row[c];
    return m;
}

/// Exact (bitwise) row comparison; returns a flat-index/value mismatch count.
inline int count_row_mismatches(const RowMap& a, const RowMap& b) {
    int bad = 0;
    for (const auto& [c, v] : a) {
        auto it = b.find(c);
        if (it == b.end() || it->second != v) ++bad;
    }
    for (const auto& [c, v] : b)
        if (!a.count(c)) ++bad;
    return bad;
}

/// Draws x in [-1,1]^d until every pre-activation sits at least `margin`
/// away from the relu kink, so finite differences stay on one linear piece.
inline std::vector<double> draw_kink_free_point(const NetworkParams& p, Rng& rng,
                                                double margin = 1e-6, int max_tries = 1000) {
    std::vector<std::vector<double>> pre;
    for (int t = 0; t < max_tries; ++t) {
        std::vector<double> x(static_cast<std::size_t>(p.arch.d));
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        forward_trace(p, x, pre);
        double dist = 1e300;
        for (const auto& layer : pre)
            for (double s : layer) dist = std::min(dist, std::abs(s));
        if (dist > margin) return x;
    }
    return {};
}

/// Max over parameters of the relative disagreement between the reverse-mode
/// gradient and a central finite difference (step eps, absolute floor 1e-8).
inline double fd_gradient_max_relerr(const NetworkParams& p, std::span<const double> x,
                                     double eps = 1e-6) {
    const std::size_t n = param_count(p.arch);
    std::vector<double> grad(n);
    forward_with_grad(p, x, grad);
    NetworkParams q = p;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double save = q.data[i];
        q.data[i] = save + eps;
        const double fp = forward(q, x);
        q.data[i] = save - eps;
        const double fm = forward(q, x);
        q.data[i] = save;
        const double fd = (fp - fm) / (2.0 * eps);
        const double err = std::abs(grad[i] - fd);
        if (err < 1e-8) continue; // absolute floor
        worst = std::max(worst, err / std::max(std::abs(grad[i]), std::abs(fd)));
    }
    return worst;
}

} // namespace nnsolve::testutil
