#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nnsolve/fnn.hpp"
#include "nnsolve/kernels/kernels.hpp"
#include "nnsolve/problems.hpp"

namespace nnsolve {

/// Fixed set of row indices the metrics are computed over. Drawn once with
/// its own RNG stream so it never collides with training batches; tiny grids
/// (size < n_test) are enumerated in full instead of sampled.
struct TestSet {
    std::vector<std::int32_t> flat; // n * d multi-indices
    std::int64_t n = 0;
    int d = 0;

    static TestSet make(const GridSpec& grid, std::int64_t n_test, std::uint64_t seed);
};

/// max over the test set of |u_true(x) - phi(x)|. Needs a truth function.
double error_inf(const NetworkParams& p, const ProblemInstance& inst, const TestSet& t);

/// (n^-1 sum |u_true(x) - phi(x)|^2)^(1/2). Needs a truth function.
double error_l2(const NetworkParams& p, const ProblemInstance& inst, const TestSet& t);

/// (n^-1 sum_k |bhat(k) - sum_j A_kj phi(x_j)|^2)^(1/2), rows via the oracle.
double residual_l2(const NetworkParams& p, const ProblemInstance& inst, const TestSet& t,
                   const kern::Kernels& kernels = kern::active_kernels());

/// inv_norm * sqrt(system_size * full_loss): the a posteriori error bound.
double residual_error_bound(double inv_norm, double system_size, double full_loss);

/// N x N values of phi varying dimensions p then q (0-based, p != q) over the
/// whole axis range while the other coordinates stay at `fixed`. Row i holds
/// phi with dimension p set to grid index i+1.
std::vector<double> slice_2d(const NetworkParams& p, const GridSpec& grid,
                             const MultiIndex& fixed, int dim_p, int dim_q);

enum class ArgmaxStrategy {
    Auto,       // exhaustive when the grid has at most 2^20 points, else sampled
    Exhaustive, // full scan; rejects grids above the 2^20 limit
    Sampled,    // best of n_samples uniform draws plus coordinate ascent
};

/// Location and value of the maximal network output over the grid. The
/// sampled search refines the best draw by coordinate ascent: one coordinate
/// swept over its full axis at a time until a whole sweep stops improving.
std::pair<MultiIndex, double> argmax_scan(const NetworkParams& p, const GridSpec& grid,
                                          std::int64_t n_samples, std::uint64_t seed,
                                          ArgmaxStrategy strategy = ArgmaxStrategy::Auto);

struct EvalReport {
    std::optional<double> e_inf;
    std::optional<double> e_l2;
    double res_l2 = 0.0;
    std::int64_t n_test = 0;
    std::string label;
    Architecture arch;
    std::map<std::string, std::string> config_echo;
};

/// Metrics over a fresh TestSet; error metrics only when truth is present.
EvalReport evaluate(const NetworkParams& p, const ProblemInstance& inst,
                    std::int64_t n_test, std::uint64_t seed,
                    const kern::Kernels& kernels = kern::active_kernels());

std::string to_json_string(const EvalReport& r);

} // namespace nnsolve
