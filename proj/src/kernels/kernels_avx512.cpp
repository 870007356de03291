#include "nnsolve/kernels/kernels.hpp"

#if defined(__AVX512F__) && defined(__AVX512DQ__)

#include <immintrin.h>

namespace nnsolve::kern {
namespace {

// Shared GEMM core over 8-row x 16-column register tiles. Mode 0 finishes
// with bias add + relu (aux = bias vector), mode 1 masks by a stored
// activation (aux = matrix with out's shape).
template <int Mode>
void mm_core(int m, int k, int p, const double* w, const double* aux,
             const double* x, double* out) {
    const __m512d zero = _mm512_setzero_pd();
    for (int c = 0; c < p; c += 16) {
        int i = 0;
        for (; i + 8 <= m; i += 8) {
            __m512d acc0[8], acc1[8];
            for (int r = 0; r < 8; ++r) { acc0[r] = zero; acc1[r] = zero; }
            for (int j = 0; j < k; ++j) {
                const double* xj = x + static_cast<std::size_t>(j) * p + c;
                const __m512d x0 = _mm512_loadu_pd(xj);
                const __m512d x1 = _mm512_loadu_pd(xj + 8);
                const double* wj = w + static_cast<std::size_t>(i) * k + j;
                for (int r = 0; r < 8; ++r) {
                    const __m512d wb = _mm512_set1_pd(wj[static_cast<std::size_t>(r) * k]);
                    acc0[r] = _mm512_fmadd_pd(wb, x0, acc0[r]);
                    acc1[r] = _mm512_fmadd_pd(wb, x1, acc1[r]);
                }
            }
            for (int r = 0; r < 8; ++r) {
                double* o = out + static_cast<std::size_t>(i + r) * p + c;
                if constexpr (Mode == 0) {
                    const __m512d b = _mm512_set1_pd(aux[i + r]);
                    _mm512_storeu_pd(o, _mm512_max_pd(_mm512_add_pd(acc0[r], b), zero));
                    _mm512_storeu_pd(o + 8, _mm512_max_pd(_mm512_add_pd(acc1[r], b), zero));
                } else {
                    const double* hp = aux + static_cast<std::size_t>(i + r) * p + c;
                    const __mmask8 m0 = _mm512_cmp_pd_mask(_mm512_loadu_pd(hp), zero, _CMP_GT_OS);
                    const __mmask8 m1 = _mm512_cmp_pd_mask(_mm512_loadu_pd(hp + 8), zero, _CMP_GT_OS);
                    _mm512_storeu_pd(o, _mm512_maskz_mov_pd(m0, acc0[r]));
                    _mm512_storeu_pd(o + 8, _mm512_maskz_mov_pd(m1, acc1[r]));
                }
            }
        }
        for (; i < m; ++i) {
            __m512d a0 = zero, a1 = zero;
            const double* wi = w + static_cast<std::size_t>(i) * k;
            for (int j = 0; j < k; ++j) {
                const double* xj = x + static_cast<std::size_t>(j) * p + c;
                const __m512d wb = _mm512_set1_pd(wi[j]);
                a0 = _mm512_fmadd_pd(wb, _mm512_loadu_pd(xj), a0);
                a1 = _mm512_fmadd_pd(wb, _mm512_loadu_pd(xj + 8), a1);
            }
            double* o = out + static_cast<std::size_t>(i) * p + c;
            if constexpr (Mode == 0) {
                const __m512d b = _mm512_set1_pd(aux[i]);
                _mm512_storeu_pd(o, _mm512_max_pd(_mm512_add_pd(a0, b), zero));
                _mm512_storeu_pd(o + 8, _mm512_max_pd(_mm512_add_pd(a1, b), zero));
            } else {
                const double* hp = aux + static_cast<std::size_t>(i) * p + c;
                const __mmask8 m0 = _mm512_cmp_pd_mask(_mm512_loadu_pd(hp), zero, _CMP_GT_OS);
                const __mmask8 m1 = _mm512_cmp_pd_mask(_mm512_loadu_pd(hp + 8), zero, _CMP_GT_OS);
                _mm512_storeu_pd(o, _mm512_maskz_mov_pd(m0, a0));
                _mm512_storeu_pd(o + 8, _mm512_maskz_mov_pd(m1, a1));
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
    const __m512d zero = _mm512_setzero_pd();
    for (int c = 0; c < p; c += 16) {
        __m512d a0 = zero, a1 = zero;
        for (int i = 0; i < m; ++i) {
            const double* hi = h + static_cast<std::size_t>(i) * p + c;
            const __m512d ab = _mm512_set1_pd(a[i]);
            a0 = _mm512_fmadd_pd(ab, _mm512_loadu_pd(hi), a0);
            a1 = _mm512_fmadd_pd(ab, _mm512_loadu_pd(hi + 8), a1);
        }
        _mm512_storeu_pd(y + c, a0);
        _mm512_storeu_pd(y + c + 8, a1);
    }
}

void top_delta(int m, int p, const double* a, const double* wgt,
               const double* h, double* d) {
    const __m512d zero = _mm512_setzero_pd();
    for (int i = 0; i < m; ++i) {
        const __m512d ab = _mm512_set1_pd(a[i]);
        const double* hi = h + static_cast<std::size_t>(i) * p;
        double* di = d + static_cast<std::size_t>(i) * p;
        for (int c = 0; c < p; c += 8) {
            const __mmask8 mk = _mm512_cmp_pd_mask(_mm512_loadu_pd(hi + c), zero, _CMP_GT_OS);
            const __m512d v = _mm512_mul_pd(ab, _mm512_loadu_pd(wgt + c));
            _mm512_storeu_pd(di + c, _mm512_maskz_mov_pd(mk, v));
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
            __m512d acc[2][4];
            for (int r = 0; r < 2; ++r)
                for (int s = 0; s < 4; ++s) acc[r][s] = _mm512_setzero_pd();
            for (int c = 0; c < p; c += 8) {
                const __m512d v0 = _mm512_loadu_pd(d0 + c);
                const __m512d v1 = _mm512_loadu_pd(d1 + c);
                for (int s = 0; s < 4; ++s) {
                    const __m512d hv = _mm512_loadu_pd(h + static_cast<std::size_t>(j + s) * p + c);
                    acc[0][s] = _mm512_fmadd_pd(v0, hv, acc[0][s]);
                    acc[1][s] = _mm512_fmadd_pd(v1, hv, acc[1][s]);
                }
            }
            for (int r = 0; r < 2; ++r)
                for (int s = 0; s < 4; ++s)
                    g[static_cast<std::size_t>(i + r) * k + j + s] += _mm512_reduce_add_pd(acc[r][s]);
        }
        for (; j < k; ++j) {
            const double* hj = h + static_cast<std::size_t>(j) * p;
            __m512d s0 = _mm512_setzero_pd(), s1 = _mm512_setzero_pd();
            for (int c = 0; c < p; c += 8) {
                const __m512d hv = _mm512_loadu_pd(hj + c);
                s0 = _mm512_fmadd_pd(_mm512_loadu_pd(d0 + c), hv, s0);
                s1 = _mm512_fmadd_pd(_mm512_loadu_pd(d1 + c), hv, s1);
            }
            g[static_cast<std::size_t>(i) * k + j] += _mm512_reduce_add_pd(s0);
            g[static_cast<std::size_t>(i + 1) * k + j] += _mm512_reduce_add_pd(s1);
        }
    }
    for (; i < m; ++i) {
        const double* di = d + static_cast<std::size_t>(i) * p;
        for (int j = 0; j < k; ++j) {
            const double* hj = h + static_cast<std::size_t>(j) * p;
            __m512d s = _mm512_setzero_pd();
            for (int c = 0; c < p; c += 8)
                s = _mm512_fmadd_pd(_mm512_loadu_pd(di + c), _mm512_loadu_pd(hj + c), s);
            g[static_cast<std::size_t>(i) * k + j] += _mm512_reduce_add_pd(s);
        }
    }
}

void acc_gemv(int m, int p, const double* h, const double* w, double* v) {
    for (int i = 0; i < m; ++i) {
        const double* hi = h + static_cast<std::size_t>(i) * p;
        __m512d s = _mm512_setzero_pd();
        for (int c = 0; c < p; c += 8)
            s = _mm512_fmadd_pd(_mm512_loadu_pd(hi + c), _mm512_loadu_pd(w + c), s);
        v[i] += _mm512_reduce_add_pd(s);
    }
}

void acc_rowsum(int m, int p, const double* d, double* v) {
    for (int i = 0; i < m; ++i) {
        const double* di = d + static_cast<std::size_t>(i) * p;
        __m512d s = _mm512_setzero_pd();
        for (int c = 0; c < p; c += 8)
            s = _mm512_add_pd(s, _mm512_loadu_pd(di + c));
        v[i] += _mm512_reduce_add_pd(s);
    }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    const __m512d ab = _mm512_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm512_storeu_pd(y + i, _mm512_fmadd_pd(ab, _mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot(std::size_t n, const double* x, const double* y) {
    __m512d s = _mm512_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        s = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), s);
    double r = _mm512_reduce_add_pd(s);
    for (; i < n; ++i) r += x[i] * y[i];
    return r;
}

double sumsq(std::size_t n, const double* x) {
    __m512d s = _mm512_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m512d v = _mm512_loadu_pd(x + i);
        s = _mm512_fmadd_pd(v, v, s);
    }
    double r = _mm512_reduce_add_pd(s);
    for (; i < n; ++i) r += x[i] * x[i];
    return r;
}

constexpr Kernels kAvx512{
    "avx512", affine_relu, col_dot, top_delta,   back_delta,
    acc_outer, acc_gemv, acc_rowsum, axpy, dot, sumsq,
};

} // namespace

const Kernels* avx512_kernels() { return &kAvx512; }

} // namespace nnsolve::kern

#else

namespace nnsolve::kern {
const Kernels* avx512_kernels() { return nullptr; }
} // namespace nnsolve::kern

#endif
