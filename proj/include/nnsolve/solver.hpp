#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nnsolve/batch_engine.hpp"
#include "nnsolve/fnn.hpp"
#include "nnsolve/problems.hpp"

namespace nnsolve {

enum class Optimizer {
    Sgd,  // theta -= tau * grad, the default update rule
    Adam, // adaptive-moment estimation, optional faster-converging switch
};

struct TrainConfig {
    std::int64_t batch_size = 10000;
    std::int64_t max_iters = 50000;
    double lr_start = 1e-3;
    double lr_end = 1e-5;
    std::uint64_t seed = 1;
    std::int64_t eval_every = 1000;
    Optimizer optimizer = Optimizer::Sgd;
    InitMode init = InitMode::InverseSqrt;

    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// tau_i = lr_start * (lr_end / lr_start)^(i / max_iters): geometric decay
/// hitting lr_start at i=0 and lr_end at i=max_iters.
double lr_schedule(const TrainConfig& cfg, std::int64_t i);

/// theta -= tau * grad, elementwise.
void sgd_step(std::span<double> theta, std::span<const double> grad, double tau);

struct HistoryRecord {
    std::int64_t iter = 0; // 1-based iteration count after the update
    double loss = 0.0;     // batch loss at the pre-update parameters
    double lr = 0.0;
    std::optional<double> e_inf, e_l2, res_l2; // filled by the eval hook
};

struct TrainHistory {
    std::vector<HistoryRecord> records;
    double duration_seconds = 0.0;
    bool diverged = false;
    std::string divergence_message;
};

struct TrainResult {
    NetworkParams params;
    TrainHistory history;
};

/// Called on each logged iteration so the caller can attach evaluation
/// metrics to the record (and, e.g., stream it to disk).
using EvalHook = std::function<void(const NetworkParams&, HistoryRecord&)>;

/// Runs max_iters mini-batch gradient steps: each iteration samples
/// batch_size row indices uniformly with replacement, forms the batched
/// residual loss via BatchEngine, and applies the optimizer update with the
/// scheduled learning rate. Logs every eval_every iterations and at the final
/// iteration. Deterministic for a fixed seed. A non-finite loss aborts the
/// loop and returns with history.diverged set.
TrainResult train(const ProblemInstance& inst, const Architecture& arch,
                  const TrainConfig& cfg, const EvalHook& hook = {},
                  const kern::Kernels& kernels = kern::active_kernels());

/// phi-hat(j) = phi(x(j); theta): the trained solution as an index function.
std::function<double(const MultiIndex&)>
solution_index_function(NetworkParams params, std::shared_ptr<const GridSpec> grid);

} // namespace nnsolve
