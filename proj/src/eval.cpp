#include "nnsolve/eval.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "nnsolve/batch_engine.hpp"
#include "nnsolve/errors.hpp"
#include "nnsolve/rng.hpp"

namespace nnsolve {

namespace {

constexpr u128 kExhaustiveLimit = u128{1} << 20;

// Lexicographic enumeration of all multi-indices into a flat array.
std::vector<std::int32_t> enumerate_all(std::int64_t N, int d, std::int64_t total) {
    std::vector<std::int32_t> flat(static_cast<std::size_t>(total) * static_cast<std::size_t>(d));
    MultiIndex idx(static_cast<std::size_t>(d), 1);
    for (std::int64_t r = 0; r < total; ++r) {
        std::copy(idx.begin(), idx.end(),
                  flat.begin() + static_cast<std::size_t>(r) * static_cast<std::size_t>(d));
        for (int k = d - 1; k >= 0; --k) {
            if (++idx[static_cast<std::size_t>(k)] <= N) break;
            idx[static_cast<std::size_t>(k)] = 1;
        }
    }
    return flat;
}

} // namespace

TestSet TestSet::make(const GridSpec& grid, std::int64_t n_test, std::uint64_t seed) {
    if (n_test < 1) throw ParamError("test set: n_test must be >= 1");
    const std::int64_t N = grid.points_per_dim();
    const int d = grid.d;
    TestSet t;
    t.d = d;
    const u128 total = grid_size(N, d);
    if (total < static_cast<u128>(n_test)) {
        t.n = static_cast<std::int64_t>(total);
        t.flat = enumerate_all(N, d, t.n);
    } else {
        t.n = n_test;
        t.flat.resize(static_cast<std::size_t>(n_test) * static_cast<std::size_t>(d));
        Rng rng(seed, RngStream::Test);
        sample_indices_flat(rng, n_test, N, d, t.flat.data());
    }
    return t;
}

double error_inf(const NetworkParams& p, const ProblemInstance& inst, const TestSet& t) {
    if (!inst.truth) throw ParamError("error_inf: instance has no truth function");
    const auto d = static_cast<std::size_t>(t.d);
    std::vector<double> x(d);
    double worst = 0.0;
    for (std::int64_t i = 0; i < t.n; ++i) {
        const std::span<const std::int32_t> idx{t.flat.data() + static_cast<std::size_t>(i) * d, d};
        inst.grid->point_of(idx, x);
        worst = std::max(worst, std::abs(inst.truth(x) - forward(p, x)));
    }
    return worst;
}

double error_l2(const NetworkParams& p, const ProblemInstance& inst, const TestSet& t) {
    if (!inst.truth) throw ParamError("error_l2: instance has no truth function");
    const auto d = static_cast<std::size_t>(t.d);
    std::vector<double> x(d);
    double acc = 0.0;
    for (std::int64_t i = 0; i < t.n; ++i) {
        const std::span<const std::int32_t> idx{t.flat.data() + static_cast<std::size_t>(i) * d, d};
        inst.grid->point_of(idx, x);
        const double e = inst.truth(x) - forward(p, x);
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(t.n));
}

double residual_l2(const NetworkParams& p, const ProblemInstance& inst, const TestSet& t,
                   const kern::Kernels& kernels) {
    BatchEngine engine(inst.grid, inst.oracle, inst.loss, kernels);
    std::vector<double> r(static_cast<std::size_t>(t.n));
    engine.residuals(p, t.flat, r);
    double acc = 0.0;
    for (const double v : r) acc += v * v;
    return std::sqrt(acc / static_cast<double>(t.n));
}

double residual_error_bound(double inv_norm, double system_size, double full_loss) {
    if (inv_norm < 0.0 || system_size < 0.0 || full_loss < 0.0)
        throw ParamError("residual_error_bound: inputs must be nonnegative");
    return inv_norm * std::sqrt(system_size * full_loss);
}

std::vector<double> slice_2d(const NetworkParams& p, const GridSpec& grid,
                             const MultiIndex& fixed, int dim_p, int dim_q) {
    const int d = grid.d;
    if (dim_p == dim_q || dim_p < 0 || dim_q < 0 || dim_p >= d || dim_q >= d)
        throw ParamError("slice_2d: need two distinct valid dimensions");
    if (static_cast<int>(fixed.size()) != d) throw ParamError("slice_2d: fixed index dimension mismatch");
    const std::int64_t N = grid.points_per_dim();
    MultiIndex idx = fixed;
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<double> out(static_cast<std::size_t>(N) * static_cast<std::size_t>(N));
    for (std::int64_t i = 1; i <= N; ++i) {
        idx[static_cast<std::size_t>(dim_p)] = static_cast<std::int32_t>(i);
        for (std::int64_t j = 1; j <= N; ++j) {
            idx[static_cast<std::size_t>(dim_q)] = static_cast<std::int32_t>(j);
            grid.point_of(idx, x);
            out[static_cast<std::size_t>((i - 1) * N + (j - 1))] = forward(p, x);
        }
    }
    return out;
}

std::pair<MultiIndex, double> argmax_scan(const NetworkParams& p, const GridSpec& grid,
                                          std::int64_t n_samples, std::uint64_t seed,
                                          ArgmaxStrategy strategy) {
    const std::int64_t N = grid.points_per_dim();
    const int d = grid.d;
    const bool small = grid_size(N, d) <= kExhaustiveLimit;
    if (strategy == ArgmaxStrategy::Exhaustive && !small)
        throw ParamError("argmax_scan: grid too large for an exhaustive scan");
    const bool exhaustive = strategy == ArgmaxStrategy::Exhaustive ||
                            (strategy == ArgmaxStrategy::Auto && small);
    std::vector<double> x(static_cast<std::size_t>(d));
    const auto value_at = [&](const MultiIndex& idx) {
        grid.point_of(idx, x);
        return forward(p, x);
    };

    MultiIndex best(static_cast<std::size_t>(d), 1);
    double best_v = value_at(best);

    if (exhaustive) {
        const auto total = static_cast<std::int64_t>(grid_size(N, d));
        MultiIndex idx(static_cast<std::size_t>(d), 1);
        for (std::int64_t r = 0; r < total; ++r) {
            const double v = value_at(idx);
            if (v > best_v) {
                best_v = v;
                best = idx;
            }
            for (int k = d - 1; k >= 0; --k) {
                if (++idx[static_cast<std::size_t>(k)] <= N) break;
                idx[static_cast<std::size_t>(k)] = 1;
            }
        }
        return {best, best_v};
    }

    if (n_samples < 1) throw ParamError("argmax_scan: n_samples must be >= 1");
    Rng rng(seed, RngStream::Scan);
    MultiIndex idx(static_cast<std::size_t>(d));
    for (std::int64_t s = 0; s < n_samples; ++s) {
        for (int k = 0; k < d; ++k)
            idx[static_cast<std::size_t>(k)] = static_cast<std::int32_t>(1 + rng.bounded(static_cast<std::uint64_t>(N)));
        const double v = value_at(idx);
        if (v > best_v) {
            best_v = v;
            best = idx;
        }
    }
    // Coordinate ascent: sweep one dimension at a time over its full axis,
    // keeping strict improvements, until a whole sweep changes nothing.
    bool improved = true;
    while (improved) {
        improved = false;
        for (int k = 0; k < d; ++k) {
            MultiIndex cand = best;
            for (std::int64_t i = 1; i <= N; ++i) {
                cand[static_cast<std::size_t>(k)] = static_cast<std::int32_t>(i);
                const double v = value_at(cand);
                if (v > best_v) {
                    best_v = v;
                    best = cand;
                    improved = true;
                }
            }
        }
    }
    return {best, best_v};
}

EvalReport evaluate(const NetworkParams& p, const ProblemInstance& inst, std::int64_t n_test,
                    std::uint64_t seed, const kern::Kernels& kernels) {
    const TestSet t = TestSet::make(*inst.grid, n_test, seed);
    EvalReport rep;
    rep.n_test = t.n;
    rep.label = inst.label;
    rep.arch = p.arch;
    if (inst.truth) {
        rep.e_inf = error_inf(p, inst, t);
        rep.e_l2 = error_l2(p, inst, t);
    }
    rep.res_l2 = residual_l2(p, inst, t, kernels);
    return rep;
}

std::string to_json_string(const EvalReport& r) {
    nlohmann::json j;
    if (r.e_inf) j["e_inf"] = *r.e_inf;
    if (r.e_l2) j["e_l2"] = *r.e_l2;
    j["res_l2"] = r.res_l2;
    j["n_test"] = r.n_test;
    j["label"] = r.label;
    j["architecture"] = {{"L", r.arch.L}, {"M", r.arch.M}, {"d", r.arch.d}};
    if (!r.config_echo.empty()) j["config"] = r.config_echo;
    return j.dump(2) + "\n";
}

} // namespace nnsolve
