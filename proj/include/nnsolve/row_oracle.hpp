#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "nnsolve/grid.hpp"

namespace nnsolve {

struct Dims {
    std::int64_t N = 0; // points per dimension
    int d = 0;
};

/// Reusable sparse-row container: column multi-indices stored flat
/// (entry i occupies cols[i*d .. i*d+d)), one value per entry.
class RowBuffer {
public:
    void reset(int d) {
        d_ = d;
        cols_.clear();
        vals_.clear();
    }

    int dim() const { return d_; }
    std::size_t size() const { return vals_.size(); }

    std::span<const std::int32_t> col(std::size_t i) const {
        return {cols_.data() + i * static_cast<std::size_t>(d_), static_cast<std::size_t>(d_)};
    }
    double val(std::size_t i) const { return vals_[i]; }

    void append(std::span<const std::int32_t> col, double v) {
        cols_.insert(cols_.end(), col.begin(), col.end());
        vals_.push_back(v);
    }

    /// Appends `base` with dimension `dim` (0-based) replaced by j.
    void append_substituted(std::span<const std::int32_t> base, int dim, std::int32_t j, double v) {
        const std::size_t at = cols_.size();
        cols_.insert(cols_.end(), base.begin(), base.end());
        cols_[at + static_cast<std::size_t>(dim)] = j;
        vals_.push_back(v);
    }

    /// Sorts entries by lexicographic column order, merges duplicate columns
    /// by summing values in append order, and drops exact zeros.
    void canonicalize();

private:
    int d_ = 0;
    std::vector<std::int32_t> cols_;
    std::vector<double> vals_;
    std::vector<std::uint32_t> order_; // scratch for canonicalize
};

/// Matrix-free view of a structured matrix: rows (and the right-hand side)
/// are generated on demand from the multi-index, never stored.
class RowOracle {
public:
    virtual ~RowOracle() = default;

    virtual Dims dims() const = 0;
    virtual int nnz_per_row_bound() const = 0;

    /// Writes row k into out (out is reset first). Columns are pairwise
    /// distinct, values nonzero and finite. Invalid k throws RangeError.
    virtual void row(std::span<const std::int32_t> k, RowBuffer& out) const = 0;

    virtual double rhs(std::span<const std::int32_t> k) const {
        (void)k;
        return 0.0;
    }

    /// Assembles the row and returns the rhs; overridden where the rhs is
    /// derived from the row itself so the row is built only once.
    virtual double row_and_rhs(std::span<const std::int32_t> k, RowBuffer& out) const {
        row(k, out);
        return rhs(k);
    }
};

struct FactorEntry {
    std::int32_t j;
    double v;
};

/// One-dimensional factor T^(n) of a Kronecker sum, described by its rows.
class DimFactor {
public:
    virtual ~DimFactor() = default;
    virtual std::int64_t n() const = 0;
    virtual int nnz_bound() const = 0;
    /// Appends row i's nonzeros to out in ascending column order.
    virtual void row(std::int32_t i, std::vector<FactorEntry>& out) const = 0;
};

/// T_ii = -2/h^2, T_{i,i+-1} = 1/h^2 (second-order centered differences).
std::shared_ptr<const DimFactor> make_poisson_factor(std::int64_t N, double h);

/// Symmetric Toeplitz with first row [2*t_1, t_0+t_2, t_3, ..., t_N] where
/// t_0 = c/(2*cos(alpha*pi/2)*h^alpha) and t_i = (1-(alpha+1)/i)*t_{i-1}.
/// Requires alpha strictly inside (1,2).
std::shared_ptr<const DimFactor> make_riesz_factor(std::int64_t N, double h, double alpha, double c);

/// Birth-death generator block: (i,i-1) = -lambda for i>=2;
/// (i,i) = lambda + min(i-1,s)*mu for i<N and s*mu at i=N;
/// (i,i+1) = -min(i,s)*mu for i<=N-1.
std::shared_ptr<const DimFactor> make_queueing_factor(std::int64_t N, double lambda,
                                                      std::int64_t s, double mu);

/// A = sum_n I x ... x T^(n) x ... x I; the diagonal column carries the sum
/// of the factor diagonals (accumulated in dimension order).
class KronSumOracle final : public RowOracle {
public:
    KronSumOracle(std::vector<std::shared_ptr<const DimFactor>> factors);

    Dims dims() const override;
    int nnz_per_row_bound() const override;
    void row(std::span<const std::int32_t> k, RowBuffer& out) const override;

    /// Appends the unmerged contributions (dimension order) without
    /// canonicalizing; shared with the queueing oracle.
    void append_raw(std::span<const std::int32_t> k, RowBuffer& out) const;

private:
    std::vector<std::shared_ptr<const DimFactor>> factors_;
    mutable std::vector<FactorEntry> scratch_; // single-row factor scratch
};

/// Queueing generator (A + R): the Kronecker-sum A-part plus the coupling
/// R = sum_{m != n} R_mn, where R_mn places e_m e_m^T in dimension m and the
/// lower-bidiagonal R_m (diag lambda_m except 0 at N, sub-diagonal
/// -lambda_m) in dimension n. Requires d <= N so e_m is well-defined.
class QueueingOracle final : public RowOracle {
public:
    QueueingOracle(std::int64_t N, std::vector<double> lambda, std::vector<std::int64_t> s,
                   std::vector<double> mu);

    Dims dims() const override;
    int nnz_per_row_bound() const override;
    void row(std::span<const std::int32_t> k, RowBuffer& out) const override;

    double mu(int n) const { return mu_[static_cast<std::size_t>(n)]; }

private:
    std::int64_t N_;
    std::vector<double> lambda_;
    std::vector<std::int64_t> s_;
    std::vector<double> mu_;
    KronSumOracle apart_;
};

/// I - T for the column-normalized circulant-like transition structure:
/// ttilde_{ij} = v_k when j = i + k (k in the shift set), T_ij =
/// ttilde_ij / colsum(j), colsum computed analytically in O(|I|).
/// Rows are indexed by the binary multi-index (N=2 per dimension).
class PbnOracle final : public RowOracle {
public:
    PbnOracle(int d, std::vector<std::int64_t> shifts, std::vector<double> values);

    Dims dims() const override { return {2, d_}; }
    int nnz_per_row_bound() const override { return static_cast<int>(shifts_.size()) + 1; }
    void row(std::span<const std::int32_t> k, RowBuffer& out) const override;

    /// Sum of v_k over shifts valid for column j (1-based flat).
    double colsum(u128 j) const;

private:
    int d_;
    u128 size_;
    std::vector<std::int64_t> shifts_;
    std::vector<double> values_;
};

/// Wraps a small dense matrix (n = N^d <= 2^16) behind the row interface.
class DenseAdapterOracle final : public RowOracle {
public:
    DenseAdapterOracle(std::vector<double> mat, std::vector<double> rhs, std::int64_t N, int d);

    Dims dims() const override { return {N_, d_}; }
    int nnz_per_row_bound() const override { return static_cast<int>(n_); }
    void row(std::span<const std::int32_t> k, RowBuffer& out) const override;
    double rhs(std::span<const std::int32_t> k) const override;

private:
    std::vector<double> mat_;
    std::vector<double> rhs_;
    std::int64_t N_;
    int d_;
    std::int64_t n_;
};

using TruthFn = std::function<double(std::span<const double>)>;

/// rhs(k) = sum_j A_kj * truth(point_of(grid, j)), evaluated on the fly
/// from the assembled row (the manufactured right-hand side b = A u_true).
class ManufacturedRhsOracle final : public RowOracle {
public:
    ManufacturedRhsOracle(std::shared_ptr<const RowOracle> inner,
                          std::shared_ptr<const GridSpec> grid, TruthFn truth);

    Dims dims() const override { return inner_->dims(); }
    int nnz_per_row_bound() const override { return inner_->nnz_per_row_bound(); }
    void row(std::span<const std::int32_t> k, RowBuffer& out) const override { inner_->row(k, out); }
    double rhs(std::span<const std::int32_t> k) const override;
    double row_and_rhs(std::span<const std::int32_t> k, RowBuffer& out) const override;

private:
    double rhs_from_row(const RowBuffer& row) const;

    std::shared_ptr<const RowOracle> inner_;
    std::shared_ptr<const GridSpec> grid_;
    TruthFn truth_;
};

} // namespace nnsolve
