#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nnsolve/row_oracle.hpp"

namespace nnsolve {

/// Fully materialized small system (n = N^d <= 2^16), used only by tests
/// and the verification suite.
struct DenseSystem {
    std::int64_t n = 0;
    std::vector<double> mat; // row-major n*n
    std::vector<double> rhs;
};

/// Walks every row of the oracle through the matrix-free interface.
DenseSystem densify(const RowOracle& op);

/// Direct solve with partial pivoting; checks the residual against
/// 1e-8*(1+|b|_inf) and throws NumericError when the matrix is singular to
/// working precision.
std::vector<double> dense_solve(const DenseSystem& sys);

/// Unit-norm null vector of a matrix whose numerical rank is exactly n-1
/// (via SVD); sign fixed so the first nonzero entry is positive. Any other
/// rank deficiency throws NumericError reporting the numerical rank.
std::vector<double> dense_nullvec(std::span<const double> mat, std::int64_t n);

/// Power iteration u <- Tu/|Tu|_1 from the uniform vector until the l1 step
/// drops below 1e-12 (cap 1e6 iterations); returns the mean-1 normalization.
/// Column sums must be 1 within 1e-10.
std::vector<double> stationary_distribution(std::span<const double> T, std::int64_t n);

/// |A^{-1}|_2 = 1/sigma_min via SVD.
double dense_inverse_norm2(std::span<const double> mat, std::int64_t n);

// Independent dense constructions used as the reference side of the
// row-equality checks. These share no assembly code with the row oracles:
// 1-D blocks are filled directly from the defining formulas and combined by
// explicit Kronecker products, in the same dimension order (so sums of
// coinciding entries agree bitwise with the oracles' merge order).

std::vector<double> dense_poisson_matrix(int d, std::int64_t N, double h);

std::vector<double> dense_riesz_matrix(int d, std::int64_t N, double h,
                                       std::span<const double> c, std::span<const double> alpha);

std::vector<double> dense_queueing_matrix(int d, std::int64_t N, double alpha,
                                          std::span<const double> lambda,
                                          std::span<const std::int64_t> s);

/// Column-normalized transition matrix T (not I-T).
std::vector<double> dense_pbn_T(int d, std::span<const std::int64_t> shifts,
                                std::span<const double> values);

} // namespace nnsolve
