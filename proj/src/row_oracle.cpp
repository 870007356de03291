#include "nnsolve/row_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nnsolve/errors.hpp"

namespace nnsolve {

namespace {

void check_index(std::span<const std::int32_t> k, const Dims& dims, const char* who) {
    if (static_cast<int>(k.size()) != dims.d)
        throw ParamError(std::string(who) + ": index has " + std::to_string(k.size()) +
                         " entries, expected " + std::to_string(dims.d));
    for (int n = 0; n < dims.d; ++n)
        if (k[n] < 1 || k[n] > dims.N)
            throw RangeError(std::string(who) + ": entry " + std::to_string(n + 1) + " = " +
                             std::to_string(k[n]) + " outside [1, " + std::to_string(dims.N) + "]");
}

} // namespace

void RowBuffer::canonicalize() {
    const std::size_t n = vals_.size();
    if (n < 2) {
        if (n == 1 && vals_[0] == 0.0) reset(d_);
        return;
    }
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) order_[i] = static_cast<std::uint32_t>(i);
    const auto* cols = cols_.data();
    const auto dd = static_cast<std::size_t>(d_);
    std::stable_sort(order_.begin(), order_.end(), [cols, dd](std::uint32_t a, std::uint32_t b) {
        return std::lexicographical_compare(cols + a * dd, cols + a * dd + dd,
                                            cols + b * dd, cols + b * dd + dd);
    });
    std::vector<std::int32_t> cols2;
    std::vector<double> vals2;
    cols2.reserve(cols_.size());
    vals2.reserve(n);
    std::size_t i = 0;
    while (i < n) {
        const std::uint32_t lead = order_[i];
        double sum = vals_[lead];
        std::size_t j = i + 1;
        while (j < n && std::equal(cols + order_[j] * dd, cols + order_[j] * dd + dd,
                                   cols + lead * dd)) {
            sum += vals_[order_[j]]; // append order preserved by the stable sort
            ++j;
        }
        if (sum != 0.0) {
            cols2.insert(cols2.end(), cols + lead * dd, cols + lead * dd + dd);
            vals2.push_back(sum);
        }
        i = j;
    }
    cols_ = std::move(cols2);
    vals_ = std::move(vals2);
}

// ---------------------------------------------------------------------------
// 1-D factors

namespace {

class PoissonFactor final : public DimFactor {
public:
    PoissonFactor(std::int64_t N, double h) : N_(N) {
        if (N < 1) throw ParamError("poisson factor: N must be >= 1");
        if (!(h > 0.0)) throw ParamError("poisson factor: h must be positive");
        diag_ = -2.0 / (h * h);
        off_ = 1.0 / (h * h);
    }
    std::int64_t n() const override { return N_; }
    int nnz_bound() const override { return 3; }
    void row(std::int32_t i, std::vector<FactorEntry>& out) const override {
        if (i > 1) out.push_back({i - 1, off_});
        out.push_back({i, diag_});
        if (i < N_) out.push_back({i + 1, off_});
    }

private:
    std::int64_t N_;
    double diag_, off_;
};

class RieszFactor final : public DimFactor {
public:
    RieszFactor(std::int64_t N, double h, double alpha, double c) : N_(N) {
        if (N < 1) throw ParamError("riesz factor: N must be >= 1");
        if (!(h > 0.0)) throw ParamError("riesz factor: h must be positive");
        if (!(alpha > 1.0) || !(alpha < 2.0))
            throw ParamError("riesz factor: alpha must lie strictly in (1,2), got " + std::to_string(alpha));
        if (!(c > 0.0)) throw ParamError("riesz factor: c must be positive");
        // t_0 .. t_N by the downward recurrence; by-distance coefficients
        // row[k] = T_{i,i+k}: row[0]=2t_1, row[1]=t_0+t_2, row[k]=t_{k+1}.
        std::vector<double> t(static_cast<std::size_t>(N) + 2);
        t[0] = c / (2.0 * std::cos(alpha * std::numbers::pi / 2.0) * std::pow(h, alpha));
        for (std::int64_t i = 1; i <= N + 1; ++i)
            t[static_cast<std::size_t>(i)] =
                (1.0 - (alpha + 1.0) / static_cast<double>(i)) * t[static_cast<std::size_t>(i - 1)];
        by_dist_.resize(static_cast<std::size_t>(N));
        by_dist_[0] = 2.0 * t[1];
        if (N >= 2) by_dist_[1] = t[0] + t[2];
        for (std::int64_t k = 2; k < N; ++k) by_dist_[static_cast<std::size_t>(k)] = t[static_cast<std::size_t>(k + 1)];
    }
    std::int64_t n() const override { return N_; }
    int nnz_bound() const override { return static_cast<int>(N_); }
    void row(std::int32_t i, std::vector<FactorEntry>& out) const override {
        for (std::int32_t j = 1; j <= N_; ++j)
            out.push_back({j, by_dist_[static_cast<std::size_t>(std::abs(j - i))]});
    }

private:
    std::int64_t N_;
    std::vector<double> by_dist_;
};

class QueueingFactor final : public DimFactor {
public:
    QueueingFactor(std::int64_t N, double lambda, std::int64_t s, double mu)
        : N_(N), lambda_(lambda), s_(s), mu_(mu) {
        if (N < 2) throw ParamError("queueing factor: N must be >= 2");
        if (s < 1) throw ParamError("queueing factor: s must be >= 1");
        if (!(lambda > 0.0)) throw ParamError("queueing factor: lambda must be positive");
        if (!(mu > 0.0)) throw ParamError("queueing factor: mu must be positive");
    }
    std::int64_t n() const override { return N_; }
    int nnz_bound() const override { return 3; }
    void row(std::int32_t i, std::vector<FactorEntry>& out) const override {
        if (i >= 2) out.push_back({i - 1, -lambda_});
        const double busy = static_cast<double>(std::min<std::int64_t>(i - 1, s_)) * mu_;
        out.push_back({i, i < N_ ? lambda_ + busy : static_cast<double>(s_) * mu_});
        if (i < N_)
            out.push_back({i + 1, -static_cast<double>(std::min<std::int64_t>(i, s_)) * mu_});
    }

private:
    std::int64_t N_;
    double lambda_;
    std::int64_t s_;
    double mu_;
};

} // namespace

std::shared_ptr<const DimFactor> make_poisson_factor(std::int64_t N, double h) {
    return std::make_shared<PoissonFactor>(N, h);
}
std::shared_ptr<const DimFactor> make_riesz_factor(std::int64_t N, double h, double alpha, double c) {
    return std::make_shared<RieszFactor>(N, h, alpha, c);
}
std::shared_ptr<const DimFactor> make_queueing_factor(std::int64_t N, double lambda,
                                                      std::int64_t s, double mu) {
    return std::make_shared<QueueingFactor>(N, lambda, s, mu);
}

// ---------------------------------------------------------------------------
// Kronecker sum

KronSumOracle::KronSumOracle(std::vector<std::shared_ptr<const DimFactor>> factors)
    : factors_(std::move(factors)) {
    if (factors_.empty()) throw ParamError("kron sum: needs at least one factor");
    for (const auto& f : factors_) {
        if (!f) throw ParamError("kron sum: null factor");
        if (f->n() != factors_.front()->n())
            throw ParamError("kron sum: factors disagree on N");
    }
}

Dims KronSumOracle::dims() const {
    return {factors_.front()->n(), static_cast<int>(factors_.size())};
}

int KronSumOracle::nnz_per_row_bound() const {
    // Off-diagonals per dimension plus the shared diagonal.
    int b = 1;
    for (const auto& f : factors_) b += f->nnz_bound() - 1;
    return b;
}

void KronSumOracle::append_raw(std::span<const std::int32_t> k, RowBuffer& out) const {
    const int d = static_cast<int>(factors_.size());
    for (int n = 0; n < d; ++n) {
        scratch_.clear();
        factors_[static_cast<std::size_t>(n)]->row(k[n], scratch_);
        for (const FactorEntry& e : scratch_) out.append_substituted(k, n, e.j, e.v);
    }
}

void KronSumOracle::row(std::span<const std::int32_t> k, RowBuffer& out) const {
    const Dims dm = dims();
    check_index(k, dm, "kron sum");
    out.reset(dm.d);
    append_raw(k, out);
    out.canonicalize();
}

// ---------------------------------------------------------------------------
// Queueing A + R

QueueingOracle::QueueingOracle(std::int64_t N, std::vector<double> lambda,
                               std::vector<std::int64_t> s, std::vector<double> mu)
    : N_(N), lambda_(std::move(lambda)), s_(std::move(s)), mu_(std::move(mu)), apart_([&] {
          if (lambda_.size() != s_.size() || lambda_.size() != mu_.size())
              throw ParamError("queueing: lambda, s, mu must have equal length");
          std::vector<std::shared_ptr<const DimFactor>> fs;
          for (std::size_t n = 0; n < lambda_.size(); ++n)
              fs.push_back(make_queueing_factor(N, lambda_[n], s_[n], mu_[n]));
          return fs;
      }()) {
    const auto d = static_cast<std::int64_t>(lambda_.size());
    if (d > N_)
        throw ParamError("queueing: the coupling term needs d <= N (basis vector e_m with m <= d), got d=" +
                         std::to_string(d) + ", N=" + std::to_string(N_));
}

Dims QueueingOracle::dims() const { return {N_, static_cast<int>(lambda_.size())}; }

int QueueingOracle::nnz_per_row_bound() const {
    const int d = static_cast<int>(lambda_.size());
    return 2 * d + 1 + d * (d - 1);
}

void QueueingOracle::row(std::span<const std::int32_t> k, RowBuffer& out) const {
    const Dims dm = dims();
    check_index(k, dm, "queueing");
    out.reset(dm.d);
    apart_.append_raw(k, out);
    // R = sum_{m != n} R_mn: the dimension-m factor e_m e_m^T keeps the row
    // only when i_m = m and leaves the column at m; dimension n carries
    // R_m's row at i_n (sub-diagonal -lambda_m, diagonal lambda_m except 0
    // at the last state).
    for (int m = 0; m < dm.d; ++m) {
        if (k[m] != m + 1) continue;
        const double lm = lambda_[static_cast<std::size_t>(m)];
        for (int n = 0; n < dm.d; ++n) {
            if (n == m) continue;
            if (k[n] >= 2) out.append_substituted(k, n, k[n] - 1, -lm);
            if (k[n] < N_) out.append_substituted(k, n, k[n], lm);
        }
    }
    out.canonicalize();
}

// ---------------------------------------------------------------------------
// Probabilistic Boolean network (I - T)

PbnOracle::PbnOracle(int d, std::vector<std::int64_t> shifts, std::vector<double> values)
    : d_(d), shifts_(std::move(shifts)), values_(std::move(values)) {
    if (d < 1) throw ParamError("pbn: dimension must be >= 1");
    if (d > 120) throw ParamError("pbn: dimension too large for 128-bit indexing");
    if (shifts_.empty() || shifts_.size() != values_.size())
        throw ParamError("pbn: shift and value lists must be nonempty and equal-length");
    size_ = grid_size(2, d);
    const auto ssize = static_cast<__int128>(size_);
    for (std::size_t i = 0; i < shifts_.size(); ++i) {
        const __int128 mag = shifts_[i] < 0 ? -static_cast<__int128>(shifts_[i])
                                            : static_cast<__int128>(shifts_[i]);
        if (mag >= ssize)
            throw ParamError("pbn: shift " + std::to_string(shifts_[i]) + " out of range for 2^" +
                             std::to_string(d) + " states");
        for (std::size_t j = 0; j < i; ++j)
            if (shifts_[j] == shifts_[i]) throw ParamError("pbn: duplicate shift");
        if (!(values_[i] > 0.0)) throw ParamError("pbn: values must be positive");
    }
    // Every column must keep at least one in-range shift, otherwise the
    // normalization divides by zero (matrix not stochastic). Columns hit by
    // shift k are [k+1, k+2^d]; verify these intervals cover [1, 2^d].
    std::vector<std::int64_t> sorted = shifts_;
    std::sort(sorted.begin(), sorted.end());
    __int128 covered_to = 0; // columns [1, covered_to] are covered
    for (std::int64_t k : sorted) {
        const __int128 lo = static_cast<__int128>(k) + 1;
        const __int128 hi = static_cast<__int128>(k) + ssize;
        if (hi < 1) continue;
        if (lo > covered_to + 1) break;
        covered_to = std::max(covered_to, hi);
    }
    if (covered_to < ssize) {
        const __int128 bad = covered_to + 1;
        throw ParamError("pbn: column " + u128_to_string(static_cast<u128>(bad < 1 ? 1 : bad)) +
                         " has zero column sum; transition matrix would not be stochastic");
    }
}

double PbnOracle::colsum(u128 j) const {
    if (j < 1 || j > size_) throw RangeError("pbn: column out of range");
    const auto sj = static_cast<__int128>(j);
    const auto ssize = static_cast<__int128>(size_);
    double s = 0.0;
    for (std::size_t i = 0; i < shifts_.size(); ++i) {
        const __int128 r = sj - static_cast<__int128>(shifts_[i]);
        if (r >= 1 && r <= ssize) s += values_[i];
    }
    return s;
}

void PbnOracle::row(std::span<const std::int32_t> k, RowBuffer& out) const {
    const Dims dm = dims();
    check_index(k, dm, "pbn");
    out.reset(d_);
    const auto i = static_cast<__int128>(zeta(k, 2, d_).value);
    const auto ssize = static_cast<__int128>(size_);
    out.append(k, 1.0); // I - T diagonal; T's own diagonal merges in below if 0 is a shift
    for (std::size_t t = 0; t < shifts_.size(); ++t) {
        const __int128 j = i + static_cast<__int128>(shifts_[t]);
        if (j < 1 || j > ssize) continue;
        const u128 ju = static_cast<u128>(j);
        const MultiIndex jc = unzeta(FlatIndex{ju}, 2, d_);
        out.append(jc, -values_[t] / colsum(ju));
    }
    out.canonicalize();
}

// ---------------------------------------------------------------------------
// Dense adapter

DenseAdapterOracle::DenseAdapterOracle(std::vector<double> mat, std::vector<double> rhs,
                                       std::int64_t N, int d)
    : mat_(std::move(mat)), rhs_(std::move(rhs)), N_(N), d_(d) {
    const u128 sz = grid_size(N, d);
    if (sz > (u128{1} << 16))
        throw ParamError("dense adapter: N^d exceeds the 2^16 size guard");
    n_ = static_cast<std::int64_t>(sz);
    if (mat_.size() != static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_))
        throw ParamError("dense adapter: matrix has wrong size");
    if (rhs_.size() != static_cast<std::size_t>(n_))
        throw ParamError("dense adapter: rhs has wrong size");
}

void DenseAdapterOracle::row(std::span<const std::int32_t> k, RowBuffer& out) const {
    check_index(k, dims(), "dense adapter");
    out.reset(d_);
    const auto r = static_cast<std::size_t>(zeta(k, N_, d_).value - 1);
    const double* m = mat_.data() + r * static_cast<std::size_t>(n_);
    for (std::int64_t c = 0; c < n_; ++c) {
        if (m[c] == 0.0) continue;
        const MultiIndex jc = unzeta(FlatIndex{static_cast<u128>(c + 1)}, N_, d_);
        out.append(jc, m[c]);
    }
}

double DenseAdapterOracle::rhs(std::span<const std::int32_t> k) const {
    check_index(k, dims(), "dense adapter");
    return rhs_[static_cast<std::size_t>(zeta(k, N_, d_).value - 1)];
}

// ---------------------------------------------------------------------------
// Manufactured right-hand side

ManufacturedRhsOracle::ManufacturedRhsOracle(std::shared_ptr<const RowOracle> inner,
                                             std::shared_ptr<const GridSpec> grid, TruthFn truth)
    : inner_(std::move(inner)), grid_(std::move(grid)), truth_(std::move(truth)) {
    if (!inner_ || !grid_ || !truth_)
        throw ParamError("manufactured rhs: inner oracle, grid and truth are all required");
    if (grid_->d != inner_->dims().d)
        throw ParamError("manufactured rhs: grid and oracle dimension mismatch");
}

double ManufacturedRhsOracle::rhs_from_row(const RowBuffer& r) const {
    std::vector<double> pt(static_cast<std::size_t>(grid_->d));
    double b = 0.0;
    for (std::size_t e = 0; e < r.size(); ++e) {
        grid_->point_of(r.col(e), pt);
        b += r.val(e) * truth_(pt);
    }
    return b;
}

double ManufacturedRhsOracle::rhs(std::span<const std::int32_t> k) const {
    RowBuffer r;
    inner_->row(k, r);
    return rhs_from_row(r);
}

double ManufacturedRhsOracle::row_and_rhs(std::span<const std::int32_t> k, RowBuffer& out) const {
    inner_->row(k, out);
    return rhs_from_row(out);
}

} // namespace nnsolve
