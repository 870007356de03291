#include "nnsolve/fnn.hpp"

#include <cmath>
#include <string>

#include "nnsolve/errors.hpp"
#include "nnsolve/rng.hpp"

namespace nnsolve {

void Architecture::validate() const {
    if (L < 2) throw ParamError("fnn: depth L must be >= 2, got " + std::to_string(L));
    if (M < 1) throw ParamError("fnn: width M must be >= 1, got " + std::to_string(M));
    if (d < 1) throw ParamError("fnn: input dimension must be >= 1, got " + std::to_string(d));
}

std::size_t param_count(const Architecture& arch) {
    arch.validate();
    const auto L = static_cast<std::size_t>(arch.L);
    const auto M = static_cast<std::size_t>(arch.M);
    const auto d = static_cast<std::size_t>(arch.d);
    return (L - 2) * M * M + (L + d) * M;
}

NetworkParams::NetworkParams(const Architecture& a) : arch(a) {
    arch.validate();
    data.assign(param_count(arch), 0.0);
}

std::size_t NetworkParams::w_offset(int l) const {
    // Layers 1..L-1 are stored as (W_l, b_l) pairs, then a.
    const auto M = static_cast<std::size_t>(arch.M);
    std::size_t off = 0;
    for (int q = 1; q < l; ++q) off += M * static_cast<std::size_t>(in_dim(q)) + M;
    return off;
}

std::size_t NetworkParams::b_offset(int l) const {
    return w_offset(l) + static_cast<std::size_t>(arch.M) * static_cast<std::size_t>(in_dim(l));
}

std::size_t NetworkParams::a_offset() const { return w_offset(arch.L); }

std::span<double> NetworkParams::w(int l) {
    return {data.data() + w_offset(l), static_cast<std::size_t>(arch.M) * static_cast<std::size_t>(in_dim(l))};
}
std::span<const double> NetworkParams::w(int l) const {
    return {data.data() + w_offset(l), static_cast<std::size_t>(arch.M) * static_cast<std::size_t>(in_dim(l))};
}
std::span<double> NetworkParams::b(int l) {
    return {data.data() + b_offset(l), static_cast<std::size_t>(arch.M)};
}
std::span<const double> NetworkParams::b(int l) const {
    return {data.data() + b_offset(l), static_cast<std::size_t>(arch.M)};
}
std::span<double> NetworkParams::a() {
    return {data.data() + a_offset(), static_cast<std::size_t>(arch.M)};
}
std::span<const double> NetworkParams::a() const {
    return {data.data() + a_offset(), static_cast<std::size_t>(arch.M)};
}

NetworkParams init_params(const Architecture& arch, InitMode mode, std::uint64_t seed) {
    NetworkParams p(arch);
    const double r = mode == InitMode::InverseSqrt ? 1.0 / std::sqrt(static_cast<double>(arch.M))
                                                   : std::sqrt(static_cast<double>(arch.M));
    Rng rng(seed, RngStream::Init);
    for (auto& v : p.data) v = rng.uniform(-r, r);
    return p;
}

namespace {

// Shared forward core: fills act[l-1] with the post-relu activation of layer
// l. Both public entry points go through here, which is what makes
// forward_with_grad's value bit-identical to forward's.
double forward_core(const NetworkParams& p, std::span<const double> x,
                    std::vector<std::vector<double>>& act,
                    std::vector<std::vector<double>>* pre_out) {
    const Architecture& arch = p.arch;
    if (static_cast<int>(x.size()) != arch.d)
        throw ParamError("fnn: input has " + std::to_string(x.size()) + " entries, expected " +
                         std::to_string(arch.d));
    const int M = arch.M;
    act.resize(static_cast<std::size_t>(arch.L - 1));
    if (pre_out) pre_out->resize(static_cast<std::size_t>(arch.L - 1));
    const double* prev = x.data();
    for (int l = 1; l <= arch.L - 1; ++l) {
        const int k = p.in_dim(l);
        auto w = p.w(l);
        auto b = p.b(l);
        auto& h = act[static_cast<std::size_t>(l - 1)];
        h.assign(static_cast<std::size_t>(M), 0.0);
        if (pre_out) (*pre_out)[static_cast<std::size_t>(l - 1)].resize(static_cast<std::size_t>(M));
        for (int i = 0; i < M; ++i) {
            double s = b[static_cast<std::size_t>(i)];
            const double* wi = w.data() + static_cast<std::size_t>(i) * k;
            for (int j = 0; j < k; ++j) s += wi[j] * prev[j];
            if (pre_out) (*pre_out)[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(i)] = s;
            h[static_cast<std::size_t>(i)] = s > 0.0 ? s : 0.0;
        }
        prev = h.data();
    }
    auto a = p.a();
    const auto& top = act.back();
    double y = 0.0;
    for (int i = 0; i < M; ++i) y += a[static_cast<std::size_t>(i)] * top[static_cast<std::size_t>(i)];
    if (!std::isfinite(y)) throw NumericError("fnn: non-finite network output");
    return y;
}

} // namespace

double forward(const NetworkParams& p, std::span<const double> x) {
    std::vector<std::vector<double>> act;
    return forward_core(p, x, act, nullptr);
}

double forward_trace(const NetworkParams& p, std::span<const double> x,
                     std::vector<std::vector<double>>& pre) {
    std::vector<std::vector<double>> act;
    return forward_core(p, x, act, &pre);
}

double forward_with_grad(const NetworkParams& p, std::span<const double> x,
                         std::span<double> grad) {
    const Architecture& arch = p.arch;
    if (grad.size() != param_count(arch))
        throw ParamError("fnn: gradient buffer has wrong length");
    std::vector<std::vector<double>> act;
    const double y = forward_core(p, x, act, nullptr);

    const int M = arch.M;
    std::fill(grad.begin(), grad.end(), 0.0);

    // d(phi)/d(a) = h_{L-1}
    {
        double* ga = grad.data() + p.a_offset();
        const auto& top = act.back();
        for (int i = 0; i < M; ++i) ga[i] = top[static_cast<std::size_t>(i)];
    }

    // delta_l = d(phi)/d(pre_l), started from the output contraction.
    std::vector<double> delta(static_cast<std::size_t>(M));
    {
        auto a = p.a();
        const auto& top = act.back();
        for (int i = 0; i < M; ++i)
            delta[static_cast<std::size_t>(i)] =
                top[static_cast<std::size_t>(i)] > 0.0 ? a[static_cast<std::size_t>(i)] : 0.0;
    }

    std::vector<double> next(static_cast<std::size_t>(M));
    for (int l = arch.L - 1; l >= 1; --l) {
        const int k = p.in_dim(l);
        const double* below = l == 1 ? x.data() : act[static_cast<std::size_t>(l - 2)].data();
        double* gw = grad.data() + p.w_offset(l);
        double* gb = grad.data() + p.b_offset(l);
        for (int i = 0; i < M; ++i) {
            const double di = delta[static_cast<std::size_t>(i)];
            gb[i] = di;
            double* gwi = gw + static_cast<std::size_t>(i) * k;
            for (int j = 0; j < k; ++j) gwi[j] = di * below[j];
        }
        if (l == 1) break;
        auto w = p.w(l);
        const auto& hprev = act[static_cast<std::size_t>(l - 2)];
        for (int j = 0; j < M; ++j) {
            if (!(hprev[static_cast<std::size_t>(j)] > 0.0)) {
                next[static_cast<std::size_t>(j)] = 0.0;
                continue;
            }
            double s = 0.0;
            for (int i = 0; i < M; ++i)
                s += w[static_cast<std::size_t>(i) * M + j] * delta[static_cast<std::size_t>(i)];
            next[static_cast<std::size_t>(j)] = s;
        }
        delta.swap(next);
    }
    return y;
}

std::vector<double> batch_forward(const NetworkParams& p,
                                  const std::vector<std::vector<double>>& points) {
    std::vector<double> out;
    out.reserve(points.size());
    std::vector<std::vector<double>> act;
    for (const auto& x : points) out.push_back(forward_core(p, x, act, nullptr));
    return out;
}

} // namespace nnsolve
