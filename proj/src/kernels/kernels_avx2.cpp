#include "nnsolve/kernels/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace nnsolve::kern {
namespace {

inline double reduce_add(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// GEMM core over 4-row x 8-column register tiles; mode as in the avx512 file.
template <int Mode>
void mm_core(int m, int k, int p, const double* w, const double* aux,
             const double* x, double* out) {
    const __m256d zero = _mm256_setzero_pd();
    for (int c = 0; c < p; c += 8) {
        int i = 0;
        for (; i + 4 <= m; i += 4) {
            __m256d acc0[4], acc1[4];
            for (int r = 0; r < 4; ++r) { acc0[r] = zero; acc1[r] = zero; }
            for (int j = 0; j < k; ++j) {
                const double* xj = x + static_cast<std::size_t>(j) * p + c;
                const __m256d x0 = _mm256_loadu_pd(xj);
                const __m256d x1 = _mm256_loadu_pd(xj + 4);
                const double* wj = w + static_cast<std::size_t>(i) * k + j;
                for (int r = 0; r < 4; ++r) {
                    const __m256d wb = _mm256_set1_pd(wj[static_cast<std::size_t>(r) * k]);
                    acc0[r] = _mm256_fmadd_pd(wb, x0, acc0[r]);
                    acc1[r] = _mm256_fmadd_pd(wb, x1, acc1[r]);
                }
            }
            for (int r = 0; r < 4; ++r) {
                double* o = out + static_cast<std::size_t>(i + r) * p + c;
                if constexpr (Mode == 0) {
                    const __m256d b = _mm256_set1_pd(aux[i + r]);
                    _mm256_storeu_pd(o, _mm256_max_pd(_mm256_add_pd(acc0[r], b), zero));
                    _mm256_storeu_pd(o + 4, _mm256_max_pd(_mm256_add_pd(acc1[r], b), zero));
                } else {
                    const double* hp = aux + static_cast<std::size_t>(i + r) * p + c;
                    const __m256d m0 = _mm256_cmp_pd(_mm256_loadu_pd(hp), zero, _CMP_GT_OS);
                    const __m256d m1 = _mm256_cmp_pd(_mm256_loadu_pd(hp + 4), zero, _CMP_GT_OS);
                    _mm256_storeu_pd(o, _mm256_and_pd(m0, acc0[r]));
                    _mm256_storeu_pd(o + 4, _mm256_and_pd(m1, acc1[r]));
                }
            }
        }
        for (; i < m; ++i) {
            __m256d a0 = zero, a1 = zero;
            const double* wi = w + static_cast<std::size_t>(i) * k;
            for (int j = 0; j < k; ++j) {
                const double* xj = x + static_cast<std::size_t>(j) * p + c;
                const __m256d wb = _mm256_set1_pd(wi[j]);
                a0 = _mm256_fmadd_pd(wb, _mm256_loadu_pd(xj), a0);
                a1 = _mm256_fmadd_pd(wb, _mm256_loadu_pd(xj + 4), a1);
            }
            double* o = out + static_cast<std::size_t>(i) * p + c;
            if constexpr (Mode == 0) {
                const __m256d b = _mm256_set1_pd(aux[i]);
                _mm256_storeu_pd(o, _mm256_max_pd(_mm256_add_pd(a0, b), zero));
                _mm256_storeu_pd(o + 4, _mm256_max_pd(_mm256_add_pd(a1, b), zero));
            } else {
                const double* hp = aux + static_cast<std::size_t>(i) * p + c;
                const __m256d m0 = _mm256_cmp_pd(_mm256_loadu_pd(hp), zero, _CMP_GT_OS);
                const __m256d m1 = _mm256_cmp_pd(_mm256_loadu_pd(hp + 4), zero, _CMP_GT_OS);
                _mm256_storeu_pd(o, _mm256_and_pd(m0, a0));
                _mm256_storeu_pd(o + 4, _mm256_and_pd(m1, a1));
            }
        }
    }
}

void affine_relu(int m, int k, int p, const double* w, const double* bias,
                 const double* x, double* h) {
    mm_core<0>(m, k, p, w, bias, x, h);
}

void back_delta(int k, int m, int p, const double* wt, const double* d,
                const double* hprev, double* dprev) {
    mm_core<1>(k, m, p, wt, hprev, d, dprev);
}

void col_dot(int m, int p, const double* h, const double* a, double* y) {
    const __m256d zero = _mm256_setzero_pd();
    for (int c = 0; c < p; c += 8) {
        __m256d a0 = zero, a1 = zero;
        for (int i = 0; i < m; ++i) {
            const double* hi = h + static_cast<std::size_t>(i) * p + c;
            const __m256d ab = _mm256_set1_pd(a[i]);
            a0 = _mm256_fmadd_pd(ab, _mm256_loadu_pd(hi), a0);
            a1 = _mm256_fmadd_pd(ab, _mm256_loadu_pd(hi + 4), a1);
        }
        _mm256_storeu_pd(y + c, a0);
        _mm256_storeu_pd(y + c + 4, a1);
    }
}

void top_delta(int m, int p, const double* a, const double* wgt,
               const double* h, double* d) {
    const __m256d zero = _mm256_setzero_pd();
    for (int i = 0; i < m; ++i) {
        const __m256d ab = _mm256_set1_pd(a[i]);
        const double* hi = h + static_cast<std::size_t>(i) * p;
        double* di = d + static_cast<std::size_t>(i) * p;
        for (int c = 0; c < p; c += 4) {
            const __m256d mk = _mm256_cmp_pd(_mm256_loadu_pd(hi + c), zero, _CMP_GT_OS);
            const __m256d v = _mm256_mul_pd(ab, _mm256_loadu_pd(wgt + c));
            _mm256_storeu_pd(di + c, _mm256_and_pd(mk, v));
        }
    }
}

void acc_outer(int m, int k, int p, const double* d, const double* h, double* g) {
    int i = 0;
    for (; i + 2 <= m; i += 2) {
        const double* d0 = d + static_cast<std::size_t>(i) * p;
        const double* d1 = d0 + p;
        int j = 0;
        for (; j + 4 <= k; j += 4) {
            __m256d acc[2][4];
            for (int r = 0; r < 2; ++r)
                for (int s = 0; s < 4; ++s) acc[r][s] = _mm256_setzero_pd();
            for (int c = 0; c < p; c += 4) {
                const __m256d v0 = _mm256_loadu_pd(d0 + c);
                const __m256d v1 = _mm256_loadu_pd(d1 + c);
                for (int s = 0; s < 4; ++s) {
                    const __m256d hv = _mm256_loadu_pd(h + static_cast<std::size_t>(j + s) * p + c);
                    acc[0][s] = _mm256_fmadd_pd(v0, hv, acc[0][s]);
                    acc[1][s] = _mm256_fmadd_pd(v1, hv, acc[1][s]);
                }
            }
            for (int r = 0; r < 2; ++r)
                for (int s = 0; s < 4; ++s)
                    g[static_cast<std::size_t>(i + r) * k + j + s] += reduce_add(acc[r][s]);
        }
        for (; j < k; ++j) {
            const double* hj = h + static_cast<std::size_t>(j) * p;
            __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
            for (int c = 0; c < p; c += 4) {
                const __m256d hv = _mm256_loadu_pd(hj + c);
                s0 = _mm256_fmadd_pd(_mm256_loadu_pd(d0 + c), hv, s0);
                s1 = _mm256_fmadd_pd(_mm256_loadu_pd(d1 + c), hv, s1);
            }
            g[static_cast<std::size_t>(i) * k + j] += reduce_add(s0);
            g[static_cast<std::size_t>(i + 1) * k + j] += reduce_add(s1);
        }
    }
    for (; i < m; ++i) {
        const double* di = d + static_cast<std::size_t>(i) * p;
        for (int j = 0; j < k; ++j) {
            const double* hj = h + static_cast<std::size_t>(j) * p;
            __m256d s = _mm256_setzero_pd();
            for (int c = 0; c < p; c += 4)
                s = _mm256_fmadd_pd(_mm256_loadu_pd(di + c), _mm256_loadu_pd(hj + c), s);
            g[static_cast<std::size_t>(i) * k + j] += reduce_add(s);
        }
    }
}

void acc_gemv(int m, int p, const double* h, const double* w, double* v) {
    for (int i = 0; i < m; ++i) {
        const double* hi = h + static_cast<std::size_t>(i) * p;
        __m256d s = _mm256_setzero_pd();
        for (int c = 0; c < p; c += 4)
            s = _mm256_fmadd_pd(_mm256_loadu_pd(hi + c), _mm256_loadu_pd(w + c), s);
        v[i] += reduce_add(s);
    }
}

void acc_rowsum(int m, int p, const double* d, double* v) {
    for (int i = 0; i < m; ++i) {
        const double* di = d + static_cast<std::size_t>(i) * p;
        __m256d s = _mm256_setzero_pd();
        for (int c = 0; c < p; c += 4)
            s = _mm256_add_pd(s, _mm256_loadu_pd(di + c));
        v[i] += reduce_add(s);
    }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    const __m256d ab = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(ab, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot(std::size_t n, const double* x, const double* y) {
    __m256d s = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        s = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s);
    double r = reduce_add(s);
    for (; i < n; ++i) r += x[i] * y[i];
    return r;
}

double sumsq(std::size_t n, const double* x) {
    __m256d s = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        s = _mm256_fmadd_pd(v, v, s);
    }
    double r = reduce_add(s);
    for (; i < n; ++i) r += x[i] * x[i];
    return r;
}

constexpr Kernels kAvx2{
    "avx2",  affine_relu, col_dot, top_delta,   back_delta,
    acc_outer, acc_gemv, acc_rowsum, axpy, dot, sumsq,
};

} // namespace

const Kernels* avx2_kernels() { return &kAvx2; }

} // namespace nnsolve::kern

#else

namespace nnsolve::kern {
const Kernels* avx2_kernels() { return nullptr; }
} // namespace nnsolve::kern

#endif
