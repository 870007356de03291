#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nnsolve/aligned.hpp"

namespace nnsolve {

/// Fully-connected ReLU network shape: L-1 hidden affine+relu layers of
/// width M over a d-dimensional input, contracted by an output vector a.
struct Architecture {
    int L = 0;
    int M = 0;
    int d = 0;

    void validate() const; // L >= 2, M >= 1, d >= 1
    friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// (L-2)M^2 + (L+d)M.
std::size_t param_count(const Architecture& arch);

/// Flat parameter vector in checkpoint order:
/// W_1 (M x d, row-major), b_1, W_2 (M x M), b_2, ..., W_{L-1}, b_{L-1}, a.
struct NetworkParams {
    Architecture arch;
    AlignedVector<double> data;

    explicit NetworkParams(const Architecture& a);

    /// Weight matrix of layer l in 1..L-1 (row-major M x in_dim(l)).
    std::span<double> w(int l);
    std::span<const double> w(int l) const;
    std::span<double> b(int l);
    std::span<const double> b(int l) const;
    std::span<double> a();
    std::span<const double> a() const;

    int in_dim(int l) const { return l == 1 ? arch.d : arch.M; }
    std::size_t w_offset(int l) const;
    std::size_t b_offset(int l) const;
    std::size_t a_offset() const;
};

enum class InitMode {
    InverseSqrt, // U(-1/sqrt(M), 1/sqrt(M)); default, keeps depth-3 activations bounded
    SqrtLiteral, // U(-sqrt(M), sqrt(M)); blows up quickly, kept selectable
};

NetworkParams init_params(const Architecture& arch, InitMode mode, std::uint64_t seed);

/// Same flat layout as NetworkParams::data.
using GradientVector = AlignedVector<double>;

/// phi(x; theta). Throws NumericError on a non-finite result.
double forward(const NetworkParams& p, std::span<const double> x);

/// Value plus d(phi)/d(theta) by reverse accumulation; the value is
/// bit-identical to forward() on the same inputs. grad must have
/// param_count entries; it is overwritten.
double forward_with_grad(const NetworkParams& p, std::span<const double> x,
                         std::span<double> grad);

std::vector<double> batch_forward(const NetworkParams& p,
                                  const std::vector<std::vector<double>>& points);

/// Forward pass that also exposes every pre-activation vector (layer l at
/// pre[l-1]); used by tests to steer clear of relu kinks.
double forward_trace(const NetworkParams& p, std::span<const double> x,
                     std::vector<std::vector<double>>& pre);

} // namespace nnsolve
