#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace nnsolve::kern {

/// Batch matrices (X, H, D) are row-major with the point index as the column.
/// The padded column count passed to every kernel must be a multiple of
/// kPointPad and the buffers 64-byte aligned; pad columns carry zero per-point
/// weight so they never contribute to values or gradients.
inline constexpr int kPointPad = 16;

constexpr int pad_points(int p) { return (p + kPointPad - 1) / kPointPad * kPointPad; }

/// One implementation of the batch linear-algebra primitives. All variants
/// compute the same quantities; only summation order (hence last-ulp rounding)
/// may differ between them.
struct Kernels {
    const char* name;

    /// h[i,:] = relu(sum_j w[i,j]*x[j,:] + bias[i]); w is m*k row-major, x k*p, h m*p.
    void (*affine_relu)(int m, int k, int p, const double* w, const double* bias,
                        const double* x, double* h);

    /// y[c] = sum_i a[i]*h[i,c].
    void (*col_dot)(int m, int p, const double* h, const double* a, double* y);

    /// d[i,c] = a[i]*wgt[c]*(h[i,c] > 0).
    void (*top_delta)(int m, int p, const double* a, const double* wgt,
                      const double* h, double* d);

    /// dprev[j,:] = (sum_i wt[j,i]*d[i,:]) masked by (hprev[j,:] > 0); wt is k*m row-major.
    void (*back_delta)(int k, int m, int p, const double* wt, const double* d,
                       const double* hprev, double* dprev);

    /// g[i,j] += sum_c d[i,c]*h[j,c]; g is m*k row-major, d m*p, h k*p.
    void (*acc_outer)(int m, int k, int p, const double* d, const double* h, double* g);

    /// v[i] += sum_c h[i,c]*w[c].
    void (*acc_gemv)(int m, int p, const double* h, const double* w, double* v);

    /// v[i] += sum_c d[i,c].
    void (*acc_rowsum)(int m, int p, const double* d, double* v);

    void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
    double (*dot)(std::size_t n, const double* x, const double* y);
    double (*sumsq)(std::size_t n, const double* x);
};

const Kernels& scalar_kernels();
const Kernels* avx2_kernels();   // nullptr when not compiled in
const Kernels* avx512_kernels(); // nullptr when not compiled in

bool cpu_supports_avx2();
bool cpu_supports_avx512();

/// Best implementation this CPU supports, or the one named by the
/// NNSOLVE_KERNELS environment variable (scalar|avx2|avx512). Resolved once;
/// an unknown or unsupported name throws ParamError.
const Kernels& active_kernels();

/// nullptr when the name is unknown or the CPU lacks the instruction set.
const Kernels* kernels_by_name(std::string_view name);

/// Every implementation runnable on this CPU (scalar always included).
std::vector<const Kernels*> available_kernels();

} // namespace nnsolve::kern
