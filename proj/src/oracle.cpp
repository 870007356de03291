#include "nnsolve/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>

#include "nnsolve/errors.hpp"

namespace nnsolve {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::int64_t guarded_size(std::int64_t N, int d, const char* who) {
    const u128 sz = grid_size(N, d);
    if (sz > (u128{1} << 16))
        throw ParamError(std::string(who) + ": N^d exceeds the 2^16 dense size guard");
    return static_cast<std::int64_t>(sz);
}

// A += I x ... x T (at dim n) x ... x I. Only one digit of the flat index
// changes, so column = row + (j - i) * N^(d-1-n).
void add_kron_term(std::vector<double>& A, std::int64_t total, int d, std::int64_t N, int n,
                   const std::vector<double>& T) {
    std::int64_t stride = 1;
    for (int q = d - 1; q > n; --q) stride *= N;
    for (std::int64_t r = 0; r < total; ++r) {
        const std::int64_t i = (r / stride) % N;
        const double* Ti = T.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(N);
        double* Ar = A.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(total);
        for (std::int64_t j = 0; j < N; ++j) {
            if (Ti[j] == 0.0) continue;
            Ar[r + (j - i) * stride] += Ti[j];
        }
    }
}

} // namespace

DenseSystem densify(const RowOracle& op) {
    const Dims dm = op.dims();
    DenseSystem sys;
    sys.n = guarded_size(dm.N, dm.d, "densify");
    sys.mat.assign(static_cast<std::size_t>(sys.n) * static_cast<std::size_t>(sys.n), 0.0);
    sys.rhs.assign(static_cast<std::size_t>(sys.n), 0.0);
    RowBuffer buf;
    for (std::int64_t r = 1; r <= sys.n; ++r) {
        const MultiIndex k = unzeta(FlatIndex{static_cast<u128>(r)}, dm.N, dm.d);
        sys.rhs[static_cast<std::size_t>(r - 1)] = op.row_and_rhs(k, buf);
        double* row = sys.mat.data() + static_cast<std::size_t>(r - 1) * static_cast<std::size_t>(sys.n);
        for (std::size_t e = 0; e < buf.size(); ++e) {
            const auto c = static_cast<std::size_t>(zeta(buf.col(e), dm.N, dm.d).value - 1);
            row[c] = buf.val(e);
        }
    }
    return sys;
}

std::vector<double> dense_solve(const DenseSystem& sys) {
    Eigen::Map<const RowMat> A(sys.mat.data(), sys.n, sys.n);
    Eigen::Map<const Eigen::VectorXd> b(sys.rhs.data(), sys.n);
    Eigen::VectorXd x = A.partialPivLu().solve(b);
    const double resid = (A * x - b).cwiseAbs().maxCoeff();
    const double tol = 1e-8 * (1.0 + b.cwiseAbs().maxCoeff());
    if (!x.allFinite() || resid > tol)
        throw NumericError("dense_solve: matrix singular to working precision (residual " +
                           std::to_string(resid) + ")");
    return {x.data(), x.data() + sys.n};
}

std::vector<double> dense_nullvec(std::span<const double> mat, std::int64_t n) {
    if (static_cast<std::int64_t>(mat.size()) != n * n)
        throw ParamError("dense_nullvec: matrix size mismatch");
    Eigen::Map<const RowMat> A(mat.data(), n, n);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // Numerical rank with a fixed relative cutoff; generators of interest
    // have sigma_min at roundoff scale while regular matrices sit far above.
    const double tol = 1e-10 * sv(0);
    std::int64_t rank = 0;
    for (std::int64_t i = 0; i < n; ++i) rank += sv(i) > tol ? 1 : 0;
    if (rank != n - 1)
        throw NumericError("dense_nullvec: numerical rank is " + std::to_string(rank) +
                           ", expected " + std::to_string(n - 1));
    Eigen::VectorXd v = svd.matrixV().col(n - 1);
    const double frob = A.norm();
    if ((A * v).norm() > 1e-8 * frob)
        throw NumericError("dense_nullvec: candidate null vector fails the residual bound");
    for (std::int64_t i = 0; i < n; ++i) {
        if (v(i) == 0.0) continue;
        if (v(i) < 0.0) v = -v;
        break;
    }
    return {v.data(), v.data() + n};
}

std::vector<double> stationary_distribution(std::span<const double> T, std::int64_t n) {
    if (static_cast<std::int64_t>(T.size()) != n * n)
        throw ParamError("stationary_distribution: matrix size mismatch");
    Eigen::Map<const RowMat> M(T.data(), n, n);
    for (std::int64_t j = 0; j < n; ++j) {
        const double cs = M.col(j).sum();
        if (std::abs(cs - 1.0) > 1e-10)
            throw ParamError("stationary_distribution: column " + std::to_string(j + 1) +
                             " sums to " + std::to_string(cs) + ", not 1");
    }
    Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd v(n);
    for (long it = 0; it < 1000000; ++it) {
        v.noalias() = M * u;
        const double l1 = v.lpNorm<1>();
        if (!(l1 > 0.0)) throw NumericError("stationary_distribution: iterate collapsed to zero");
        v /= l1;
        const double step = (v - u).lpNorm<1>();
        u.swap(v);
        if (step <= 1e-12) {
            u *= static_cast<double>(n) / u.sum(); // mean-1 normalization
            return {u.data(), u.data() + n};
        }
    }
    throw NumericError("stationary_distribution: no convergence within 1e6 iterations");
}

double dense_inverse_norm2(std::span<const double> mat, std::int64_t n) {
    if (static_cast<std::int64_t>(mat.size()) != n * n)
        throw ParamError("dense_inverse_norm2: matrix size mismatch");
    Eigen::Map<const RowMat> A(mat.data(), n, n);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    const double smin = svd.singularValues()(n - 1);
    if (!(smin > 0.0)) throw NumericError("dense_inverse_norm2: matrix is singular");
    return 1.0 / smin;
}

std::vector<double> dense_poisson_matrix(int d, std::int64_t N, double h) {
    const std::int64_t total = guarded_size(N, d, "dense_poisson_matrix");
    std::vector<double> T(static_cast<std::size_t>(N) * static_cast<std::size_t>(N), 0.0);
    for (std::int64_t i = 0; i < N; ++i) {
        if (i > 0) T[static_cast<std::size_t>(i * N + i - 1)] = 1.0 / (h * h);
        T[static_cast<std::size_t>(i * N + i)] = -2.0 / (h * h);
        if (i < N - 1) T[static_cast<std::size_t>(i * N + i + 1)] = 1.0 / (h * h);
    }
    std::vector<double> A(static_cast<std::size_t>(total) * static_cast<std::size_t>(total), 0.0);
    for (int n = 0; n < d; ++n) add_kron_term(A, total, d, N, n, T);
    return A;
}

std::vector<double> dense_riesz_matrix(int d, std::int64_t N, double h,
                                       std::span<const double> c, std::span<const double> alpha) {
    if (static_cast<int>(c.size()) != d || static_cast<int>(alpha.size()) != d)
        throw ParamError("dense_riesz_matrix: c and alpha must have one entry per dimension");
    const std::int64_t total = guarded_size(N, d, "dense_riesz_matrix");
    std::vector<double> A(static_cast<std::size_t>(total) * static_cast<std::size_t>(total), 0.0);
    std::vector<double> t(static_cast<std::size_t>(N) + 2);
    std::vector<double> T(static_cast<std::size_t>(N) * static_cast<std::size_t>(N));
    for (int n = 0; n < d; ++n) {
        const double an = alpha[static_cast<std::size_t>(n)];
        t[0] = c[static_cast<std::size_t>(n)] /
               (2.0 * std::cos(an * std::numbers::pi / 2.0) * std::pow(h, an));
        for (std::int64_t i = 1; i <= N + 1; ++i)
            t[static_cast<std::size_t>(i)] =
                (1.0 - (an + 1.0) / static_cast<double>(i)) * t[static_cast<std::size_t>(i - 1)];
        for (std::int64_t i = 0; i < N; ++i)
            for (std::int64_t j = 0; j < N; ++j) {
                const std::int64_t dist = i > j ? i - j : j - i;
                double v;
                if (dist == 0) v = 2.0 * t[1];
                else if (dist == 1) v = t[0] + t[2];
                else v = t[static_cast<std::size_t>(dist + 1)];
                T[static_cast<std::size_t>(i * N + j)] = v;
            }
        add_kron_term(A, total, d, N, n, T);
    }
    return A;
}

std::vector<double> dense_queueing_matrix(int d, std::int64_t N, double alpha,
                                          std::span<const double> lambda,
                                          std::span<const std::int64_t> s) {
    if (static_cast<int>(lambda.size()) != d || static_cast<int>(s.size()) != d)
        throw ParamError("dense_queueing_matrix: lambda and s must have one entry per dimension");
    const std::int64_t total = guarded_size(N, d, "dense_queueing_matrix");
    std::vector<double> A(static_cast<std::size_t>(total) * static_cast<std::size_t>(total), 0.0);
    std::vector<double> T(static_cast<std::size_t>(N) * static_cast<std::size_t>(N));
    for (int n = 0; n < d; ++n) {
        const double ln = lambda[static_cast<std::size_t>(n)];
        const auto sn = s[static_cast<std::size_t>(n)];
        const double mu = (ln + std::pow(static_cast<double>(N - 1), -alpha)) / static_cast<double>(sn);
        std::fill(T.begin(), T.end(), 0.0);
        for (std::int64_t i = 1; i <= N; ++i) {
            double* Ti = T.data() + static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(N);
            if (i >= 2) Ti[i - 2] = -ln;
            Ti[i - 1] = i < N ? ln + static_cast<double>(std::min<std::int64_t>(i - 1, sn)) * mu
                              : static_cast<double>(sn) * mu;
            if (i < N) Ti[i] = -static_cast<double>(std::min<std::int64_t>(i, sn)) * mu;
        }
        add_kron_term(A, total, d, N, n, T);
    }
    // Coupling term, same (m,n) order and same per-pair entry order as the
    // matrix-free assembly so shared entries accumulate identically.
    std::vector<std::int64_t> strides(static_cast<std::size_t>(d), 1);
    for (int q = d - 2; q >= 0; --q)
        strides[static_cast<std::size_t>(q)] = strides[static_cast<std::size_t>(q + 1)] * N;
    for (int m = 0; m < d; ++m) {
        const double lm = lambda[static_cast<std::size_t>(m)];
        for (int n = 0; n < d; ++n) {
            if (n == m) continue;
            for (std::int64_t r = 0; r < total; ++r) {
                const std::int64_t im = (r / strides[static_cast<std::size_t>(m)]) % N + 1;
                if (im != m + 1) continue;
                const std::int64_t in = (r / strides[static_cast<std::size_t>(n)]) % N + 1;
                double* Ar = A.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(total);
                if (in >= 2) Ar[r - strides[static_cast<std::size_t>(n)]] += -lm;
                if (in < N) Ar[r] += lm;
            }
        }
    }
    return A;
}

std::vector<double> dense_pbn_T(int d, std::span<const std::int64_t> shifts,
                                std::span<const double> values) {
    if (shifts.size() != values.size() || shifts.empty())
        throw ParamError("dense_pbn_T: shift and value lists must be nonempty and equal-length");
    const std::int64_t total = guarded_size(2, d, "dense_pbn_T");
    std::vector<double> ttilde(static_cast<std::size_t>(total) * static_cast<std::size_t>(total), 0.0);
    for (std::int64_t i = 1; i <= total; ++i)
        for (std::size_t t = 0; t < shifts.size(); ++t) {
            const std::int64_t j = i + shifts[t];
            if (j < 1 || j > total) continue;
            ttilde[static_cast<std::size_t>((i - 1) * total + (j - 1))] = values[t];
        }
    for (std::int64_t j = 0; j < total; ++j) {
        double cs = 0.0;
        for (std::int64_t i = 0; i < total; ++i) cs += ttilde[static_cast<std::size_t>(i * total + j)];
        if (cs == 0.0)
            throw NumericError("dense_pbn_T: column " + std::to_string(j + 1) + " sums to zero");
        for (std::int64_t i = 0; i < total; ++i) ttilde[static_cast<std::size_t>(i * total + j)] /= cs;
    }
    return ttilde;
}

} // namespace nnsolve
