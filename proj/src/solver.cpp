#include "nnsolve/solver.hpp"

#include <chrono>
#include <cmath>

#include "nnsolve/errors.hpp"
#include "nnsolve/rng.hpp"

namespace nnsolve {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ParamError("train: batch_size must be >= 1");
    if (max_iters < 0) throw ParamError("train: max_iters must be >= 0");
    if (!(lr_end > 0.0) || !(lr_end <= lr_start))
        throw ParamError("train: need 0 < lr_end <= lr_start");
    if (eval_every < 1) throw ParamError("train: eval_every must be >= 1");
}

double lr_schedule(const TrainConfig& cfg, std::int64_t i) {
    if (i < 0 || i > cfg.max_iters) throw RangeError("lr_schedule: iteration out of range");
    if (cfg.max_iters == 0) return cfg.lr_start;
    const double t = static_cast<double>(i) / static_cast<double>(cfg.max_iters);
    return cfg.lr_start * std::pow(cfg.lr_end / cfg.lr_start, t);
}

void sgd_step(std::span<double> theta, std::span<const double> grad, double tau) {
    if (theta.size() != grad.size()) throw ParamError("sgd_step: shape mismatch");
    kern::active_kernels().axpy(theta.size(), -tau, grad.data(), theta.data());
}

TrainResult train(const ProblemInstance& inst, const Architecture& arch,
                  const TrainConfig& cfg, const EvalHook& hook,
                  const kern::Kernels& kernels) {
    arch.validate();
    cfg.validate();
    if (arch.d != inst.grid->d) throw ParamError("train: architecture dimension mismatch");

    const auto t_start = std::chrono::steady_clock::now();
    TrainResult out{init_params(arch, cfg.init, cfg.seed), {}};
    NetworkParams& params = out.params;
    TrainHistory& hist = out.history;

    BatchEngine engine(inst.grid, inst.oracle, inst.loss, kernels);
    Rng batch_rng(cfg.seed, RngStream::Batch);
    const Dims dims = inst.oracle->dims();
    const std::size_t n_param = param_count(arch);
    std::vector<std::int32_t> batch(static_cast<std::size_t>(cfg.batch_size) *
                                    static_cast<std::size_t>(dims.d));
    GradientVector grad(n_param);

    // Adam state, allocated only when selected.
    AlignedVector<double> m1, m2;
    if (cfg.optimizer == Optimizer::Adam) {
        m1.assign(n_param, 0.0);
        m2.assign(n_param, 0.0);
    }
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;

    for (std::int64_t i = 0; i < cfg.max_iters; ++i) {
        sample_indices_flat(batch_rng, cfg.batch_size, dims.N, dims.d, batch.data());
        const double tau = lr_schedule(cfg, i);
        double loss = 0.0;
        try {
            loss = engine.loss_and_grad(params, batch, grad);
        } catch (const NumericError& e) {
            hist.diverged = true;
            hist.divergence_message = "iteration " + std::to_string(i + 1) + ": " + e.what();
            break;
        }

        if (cfg.optimizer == Optimizer::Sgd) {
            kernels.axpy(n_param, -tau, grad.data(), params.data.data());
        } else {
            const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(i + 1));
            const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(i + 1));
            for (std::size_t j = 0; j < n_param; ++j) {
                m1[j] = kBeta1 * m1[j] + (1.0 - kBeta1) * grad[j];
                m2[j] = kBeta2 * m2[j] + (1.0 - kBeta2) * grad[j] * grad[j];
                params.data[j] -= tau * (m1[j] / bc1) / (std::sqrt(m2[j] / bc2) + kAdamEps);
            }
        }

        const std::int64_t iter = i + 1;
        if (iter % cfg.eval_every == 0 || iter == cfg.max_iters) {
            HistoryRecord rec{iter, loss, tau, {}, {}, {}};
            if (hook) hook(params, rec);
            hist.records.push_back(std::move(rec));
        }
    }

    hist.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

std::function<double(const MultiIndex&)>
solution_index_function(NetworkParams params, std::shared_ptr<const GridSpec> grid) {
    if (!grid) throw ParamError("solution_index_function: grid required");
    const auto dim = static_cast<std::size_t>(grid->d);
    return [p = std::move(params), g = std::move(grid),
            x = std::vector<double>(dim)](const MultiIndex& idx) mutable {
        g->point_of(idx, x);
        return forward(p, x);
    };
}

} // namespace nnsolve
