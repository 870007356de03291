#include "nnsolve/kernels/kernels.hpp"

namespace nnsolve::kern {
namespace {

void affine_relu(int m, int k, int p, const double* w, const double* bias,
                 const double* x, double* h) {
    for (int i = 0; i < m; ++i) {
        const double* wi = w + static_cast<std::size_t>(i) * k;
        double* hi = h + static_cast<std::size_t>(i) * p;
        for (int c = 0; c < p; ++c) hi[c] = bias[i];
        for (int j = 0; j < k; ++j) {
            const double wij = wi[j];
            const double* xj = x + static_cast<std::size_t>(j) * p;
            for (int c = 0; c < p; ++c) hi[c] += wij * xj[c];
        }
        for (int c = 0; c < p; ++c) hi[c] = hi[c] > 0.0 ? hi[c] : 0.0;
    }
}

void col_dot(int m, int p, const double* h, const double* a, double* y) {
    for (int c = 0; c < p; ++c) y[c] = 0.0;
    for (int i = 0; i < m; ++i) {
        const double ai = a[i];
        const double* hi = h + static_cast<std::size_t>(i) * p;
        for (int c = 0; c < p; ++c) y[c] += ai * hi[c];
    }
}

void top_delta(int m, int p, const double* a, const double* wgt,
               const double* h, double* d) {
    for (int i = 0; i < m; ++i) {
        const double ai = a[i];
        const double* hi = h + static_cast<std::size_t>(i) * p;
        double* di = d + static_cast<std::size_t>(i) * p;
        for (int c = 0; c < p; ++c) di[c] = hi[c] > 0.0 ? ai * wgt[c] : 0.0;
    }
}

void back_delta(int k, int m, int p, const double* wt, const double* d,
                const double* hprev, double* dprev) {
    for (int j = 0; j < k; ++j) {
        const double* wj = wt + static_cast<std::size_t>(j) * m;
        double* dp = dprev + static_cast<std::size_t>(j) * p;
        for (int c = 0; c < p; ++c) dp[c] = 0.0;
        for (int i = 0; i < m; ++i) {
            const double wji = wj[i];
            const double* di = d + static_cast<std::size_t>(i) * p;
            for (int c = 0; c < p; ++c) dp[c] += wji * di[c];
        }
        const double* hp = hprev + static_cast<std::size_t>(j) * p;
        for (int c = 0; c < p; ++c) dp[c] = hp[c] > 0.0 ? dp[c] : 0.0;
    }
}

void acc_outer(int m, int k, int p, const double* d, const double* h, double* g) {
    for (int i = 0; i < m; ++i) {
        const double* di = d + static_cast<std::size_t>(i) * p;
        double* gi = g + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < k; ++j) {
            const double* hj = h + static_cast<std::size_t>(j) * p;
            double s = 0.0;
            for (int c = 0; c < p; ++c) s += di[c] * hj[c];
            gi[j] += s;
        }
    }
}

void acc_gemv(int m, int p, const double* h, const double* w, double* v) {
    for (int i = 0; i < m; ++i) {
        const double* hi = h + static_cast<std::size_t>(i) * p;
        double s = 0.0;
        for (int c = 0; c < p; ++c) s += hi[c] * w[c];
        v[i] += s;
    }
}

void acc_rowsum(int m, int p, const double* d, double* v) {
    for (int i = 0; i < m; ++i) {
        const double* di = d + static_cast<std::size_t>(i) * p;
        double s = 0.0;
        for (int c = 0; c < p; ++c) s += di[c];
        v[i] += s;
    }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot(std::size_t n, const double* x, const double* y) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sumsq(std::size_t n, const double* x) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

constexpr Kernels kScalar{
    "scalar", affine_relu, col_dot, top_delta,   back_delta,
    acc_outer, acc_gemv, acc_rowsum, axpy, dot, sumsq,
};

} // namespace

const Kernels& scalar_kernels() { return kScalar; }

} // namespace nnsolve::kern
