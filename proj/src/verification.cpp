#include "nnsolve/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "nnsolve/batch_engine.hpp"
#include "nnsolve/errors.hpp"
#include "nnsolve/eval.hpp"
#include "nnsolve/oracle.hpp"
#include "nnsolve/problems.hpp"
#include "nnsolve/rng.hpp"

namespace nnsolve {

namespace {

/// Forwards every call except that row (2,2,...) gets its first value
/// scaled by 1+1e-7; exercises the fault path of the row-equality check.
class CorruptedOracle : public RowOracle {
public:
    explicit CorruptedOracle(std::shared_ptr<const RowOracle> inner) : inner_(std::move(inner)) {}

    Dims dims() const override { return inner_->dims(); }
    int nnz_per_row_bound() const override { return inner_->nnz_per_row_bound(); }

    void row(std::span<const std::int32_t> k, RowBuffer& out) const override {
        inner_->row(k, out);
        if (!std::all_of(k.begin(), k.end(), [](std::int32_t v) { return v == 2; }) ||
            out.size() == 0)
            return;
        RowBuffer tmp;
        tmp.reset(dims().d);
        for (std::size_t e = 0; e < out.size(); ++e)
            tmp.append(out.col(e), e == 0 ? out.val(e) * (1.0 + 1e-7) : out.val(e));
        out = tmp;
    }

    double rhs(std::span<const std::int32_t> k) const override { return inner_->rhs(k); }

private:
    std::shared_ptr<const RowOracle> inner_;
};

using DenseRow = std::map<u128, double>;

DenseRow oracle_row_map(const RowOracle& op, std::span<const std::int32_t> k, RowBuffer& buf) {
    op.row(k, buf);
    const auto [N, d] = op.dims();
    DenseRow m;
    for (std::size_t e = 0; e < buf.size(); ++e) m[zeta(buf.col(e), N, d).value] = buf.val(e);
    return m;
}

/// Max absolute entry disagreement between an oracle row and a dense row;
/// structural mismatches count with the full magnitude of the lone entry.
double row_discrepancy(const DenseRow& got, const double* dense, std::int64_t n) {
    double worst = 0.0;
    for (const auto& [c, v] : got) {
        const double ref = dense[static_cast<std::size_t>(c - 1)];
        worst = std::max(worst, std::abs(v - ref));
        if (v != ref) worst = std::max(worst, std::numeric_limits<double>::min());
    }
    std::int64_t nnz = 0;
    for (std::int64_t c = 0; c < n; ++c)
        if (dense[c] != 0.0) {
            ++nnz;
            if (!got.count(static_cast<u128>(c + 1)))
                worst = std::max(worst, std::abs(dense[c]));
        }
    if (static_cast<std::int64_t>(got.size()) != nnz)
        worst = std::max(worst, std::numeric_limits<double>::min());
    return worst;
}

/// Walks all rows of `op` against the dense reference matrix; bit-exact
/// matrices give discrepancy 0.
VerifyCheck check_rows(std::string name, const RowOracle& op, std::span<const double> dense) {
    const auto [N, d] = op.dims();
    const auto n = static_cast<std::int64_t>(grid_size(N, d));
    RowBuffer buf;
    MultiIndex idx(static_cast<std::size_t>(d), 1);
    double worst = 0.0;
    for (std::int64_t r = 0; r < n; ++r) {
        const DenseRow got = oracle_row_map(op, idx, buf);
        worst = std::max(worst, row_discrepancy(got, dense.data() + r * n, n));
        for (int k = d - 1; k >= 0; --k) {
            if (++idx[static_cast<std::size_t>(k)] <= N) break;
            idx[static_cast<std::size_t>(k)] = 1;
        }
    }
    return {std::move(name), worst == 0.0, worst, "max |oracle - dense| over all entries"};
}

/// Central finite differences of phi against the reverse-mode gradient at
/// kink-free points; worst relative error over `trials` random (theta, x).
VerifyCheck check_point_gradients(int trials) {
    Rng rng(20240 + 17, RngStream::Scan);
    double worst = 0.0;
    std::vector<std::vector<double>> pre;
    for (int t = 0; t < trials; ++t) {
        const int d = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
        const Architecture arch{3, 6, d};
        NetworkParams p = init_params(arch, InitMode::InverseSqrt, 100 + static_cast<std::uint64_t>(t));
        std::vector<double> x(static_cast<std::size_t>(d));
        double margin = 0.0;
        for (int tries = 0; tries < 200 && margin <= 1e-6; ++tries) {
            for (auto& v : x) v = rng.uniform(-1.0, 1.0);
            forward_trace(p, x, pre);
            margin = 1e300;
            for (const auto& layer : pre)
                for (double s : layer) margin = std::min(margin, std::abs(s));
        }
        if (margin <= 1e-6) continue; // no kink-free point found; skip draw
        std::vector<double> grad(param_count(arch));
        forward_with_grad(p, x, grad);
        const double eps = 1e-6;
        for (std::size_t j = 0; j < grad.size(); ++j) {
            const double save = p.data[j];
            p.data[j] = save + eps;
            const double fp = forward(p, x);
            p.data[j] = save - eps;
            const double fm = forward(p, x);
            p.data[j] = save;
            const double fd = (fp - fm) / (2.0 * eps);
            const double err = std::abs(grad[j] - fd);
            if (err < 1e-8) continue;
            worst = std::max(worst, err / std::max(std::abs(grad[j]), std::abs(fd)));
        }
    }
    return {"point-gradients", worst < 1e-5, worst,
            "worst relative error, reverse mode vs central differences"};
}

VerifyCheck check_batch_gradients() {
    double worst = 0.0;
    int which = 0;
    for (const auto& inst : {build_poisson(2, 4), build_queueing(2, 5), build_pbn(5)}) {
        const int d = inst.grid->d;
        const Architecture arch{3, 5, d};
        NetworkParams p = init_params(arch, InitMode::InverseSqrt, 31 + static_cast<std::uint64_t>(which));
        BatchEngine eng(inst.grid, inst.oracle, inst.loss);
        Rng rng(77 + static_cast<std::uint64_t>(which++), RngStream::Batch);
        std::vector<std::int32_t> batch(static_cast<std::size_t>(6 * d));
        sample_indices_flat(rng, 6, inst.grid->points_per_dim(), d, batch.data());
        GradientVector grad(param_count(arch));
        eng.loss_and_grad(p, batch, grad);
        for (std::size_t j = 0; j < grad.size(); ++j) {
            const double save = p.data[j];
            const double h = 1e-6 * std::max(1.0, std::abs(save));
            p.data[j] = save + h;
            const double fp = eng.loss(p, batch);
            p.data[j] = save - h;
            const double fm = eng.loss(p, batch);
            p.data[j] = save;
            const double fd = (fp - fm) / (2.0 * h);
            const double err = std::abs(grad[j] - fd);
            if (err < 1e-9) continue;
            worst = std::max(worst, err / std::max(std::abs(grad[j]), std::abs(fd)));
        }
    }
    return {"batch-gradients", worst < 1e-5, worst,
            "worst relative error of the batched loss gradient vs central differences"};
}

/// Residual of the dense solution pushed through the matrix-free rows.
VerifyCheck check_dense_solve(std::string name, const ProblemInstance& inst) {
    const DenseSystem sys = densify(*inst.oracle);
    const std::vector<double> u = dense_solve(sys);
    const auto [N, d] = inst.oracle->dims();
    RowBuffer buf;
    MultiIndex idx(static_cast<std::size_t>(d), 1);
    double worst = 0.0;
    for (std::int64_t r = 0; r < sys.n; ++r) {
        const double b = inst.oracle->row_and_rhs(idx, buf);
        double dot = 0.0;
        for (std::size_t e = 0; e < buf.size(); ++e)
            dot += buf.val(e) * u[static_cast<std::size_t>(zeta(buf.col(e), N, d).value - 1)];
        worst = std::max(worst, std::abs(dot - b));
        for (int k = d - 1; k >= 0; --k) {
            if (++idx[static_cast<std::size_t>(k)] <= N) break;
            idx[static_cast<std::size_t>(k)] = 1;
        }
    }
    return {std::move(name), worst <= 1e-10, worst,
            "max |A u - b| of the dense solution through the row oracle"};
}

VerifyCheck check_error_bound() {
    const auto inst = build_poisson(2, 4);
    const DenseSystem sys = densify(*inst.oracle);
    const std::vector<double> u = dense_solve(sys);
    const double inv_norm = dense_inverse_norm2(sys.mat, sys.n);
    const NetworkParams p = init_params({3, 8, 2}, InitMode::InverseSqrt, 5);

    const TestSet t = TestSet::make(*inst.grid, 1000, 1); // all 16 rows exactly once
    BatchEngine eng(inst.grid, inst.oracle, inst.loss);
    const double full_loss = eng.loss(p, t.flat);
    std::vector<double> x(2);
    double err2 = 0.0;
    for (std::int64_t r = 0; r < t.n; ++r) {
        const auto row = std::span<const std::int32_t>(t.flat).subspan(
            static_cast<std::size_t>(2 * r), 2);
        inst.grid->point_of(row, x);
        const double diff =
            forward(p, x) - u[static_cast<std::size_t>((row[0] - 1) * 4 + (row[1] - 1))];
        err2 += diff * diff;
    }
    const double bound = residual_error_bound(inv_norm, static_cast<double>(sys.n), full_loss);
    const double ratio = std::sqrt(err2) / bound;
    return {"error-bound", ratio <= 1.0, ratio,
            "|phi - u|_2 over the a posteriori bound (must be <= 1)"};
}

VerifyCheck check_pbn_columns() {
    const std::vector<std::int64_t> shifts{-13, -5, 2, 6};
    const std::vector<double> values{1.0, 4.0, 3.0, 2.0};
    const auto T = dense_pbn_T(10, shifts, values);
    const std::int64_t n = 1024;
    double worst = 0.0;
    for (std::int64_t c = 0; c < n; ++c) {
        double sum = 0.0;
        for (std::int64_t r = 0; r < n; ++r) sum += T[static_cast<std::size_t>(r * n + c)];
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return {"pbn-column-sums", worst <= 1e-10, worst, "max |column sum - 1| of the transition matrix"};
}

VerifyCheck check_queueing_rank() {
    const auto inst = build_queueing(2, 8, 1.0, {0.01, 0.01}, {2, 4});
    const DenseSystem sys = densify(*inst.oracle);
    try {
        const std::vector<double> v = dense_nullvec(sys.mat, sys.n);
        double worst = 0.0;
        for (std::int64_t r = 0; r < sys.n; ++r) {
            double dot = 0.0;
            for (std::int64_t c = 0; c < sys.n; ++c)
                dot += sys.mat[static_cast<std::size_t>(r * sys.n + c)] *
                       v[static_cast<std::size_t>(c)];
            worst = std::max(worst, std::abs(dot));
        }
        return {"queueing-rank", worst <= 1e-8, worst,
                "max |A v| for the unit null vector of the rank n-1 generator"};
    } catch (const NumericError& e) {
        return {"queueing-rank", false, std::numeric_limits<double>::infinity(),
                std::string("null vector extraction failed: ") + e.what()};
    }
}

} // namespace

VerifyResult run_verification(const VerifyOptions& opt) {
    VerifyResult out;

    {
        const auto inst = build_poisson(2, 4);
        std::shared_ptr<const RowOracle> op = inst.oracle;
        if (opt.inject_row_fault) op = std::make_shared<CorruptedOracle>(op);
        out.checks.push_back(
            check_rows("poisson-rows", *op, dense_poisson_matrix(2, 4, inst.grid->h)));
    }
    {
        const auto inst = build_riesz(2, 6);
        const std::vector<double> c{1.0, 1.0}, alpha{1.5, 1.5};
        out.checks.push_back(check_rows("riesz-rows", *inst.oracle,
                                        dense_riesz_matrix(2, 6, inst.grid->h, c, alpha)));
    }
    {
        const auto inst = build_queueing(2, 8, 1.0, {0.01, 0.01}, {2, 4});
        const std::vector<double> lambda{0.01, 0.01};
        const std::vector<std::int64_t> s{2, 4};
        out.checks.push_back(
            check_rows("queueing-rows", *inst.oracle, dense_queueing_matrix(2, 8, 1.0, lambda, s)));
    }
    {
        const auto inst = build_pbn(10);
        const std::vector<std::int64_t> shifts{-13, -5, 2, 6};
        const std::vector<double> values{1.0, 4.0, 3.0, 2.0};
        auto T = dense_pbn_T(10, shifts, values);
        // The oracle serves I - T; fold the dense side to match.
        const std::int64_t n = 1024;
        for (std::int64_t r = 0; r < n; ++r)
            for (std::int64_t c = 0; c < n; ++c) {
                auto& v = T[static_cast<std::size_t>(r * n + c)];
                v = (r == c ? 1.0 : 0.0) - v;
            }
        out.checks.push_back(check_rows("pbn-rows", *inst.oracle, T));
    }

    out.checks.push_back(check_point_gradients(20));
    out.checks.push_back(check_batch_gradients());
    out.checks.push_back(check_dense_solve("poisson-dense-solve", build_poisson(2, 4)));
    out.checks.push_back(check_dense_solve("riesz-dense-solve", build_riesz(2, 6)));
    out.checks.push_back(check_error_bound());
    out.checks.push_back(check_pbn_columns());
    out.checks.push_back(check_queueing_rank());
    return out;
}

std::string to_json_string(const VerifyResult& r) {
    nlohmann::json j;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : r.checks)
        j["checks"].push_back({{"name", c.name},
                               {"pass", c.pass},
                               {"discrepancy", c.discrepancy},
                               {"detail", c.detail}});
    j["all_pass"] = r.all_pass();
    return j.dump(2) + "\n";
}

} // namespace nnsolve
