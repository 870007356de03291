#pragma once

#include <memory>
#include <string>

#include "nnsolve/grid.hpp"
#include "nnsolve/loss.hpp"
#include "nnsolve/row_oracle.hpp"

namespace nnsolve {

/// Everything a training run needs: grid, matrix-free operator, loss shape,
/// and the exact solution when the experiment manufactures one.
struct ProblemInstance {
    std::shared_ptr<const GridSpec> grid;
    std::shared_ptr<const RowOracle> oracle;
    LossSpec loss;
    TruthFn truth; // empty when the solution is unknown
    std::string label;
};

/// Laplacian with second-order differences on the interior grid of [-1,1]^d,
/// h = 2/(N+1); manufactured solution prod_i sin(pi x_i); plain loss.
ProblemInstance build_poisson(int d, std::int64_t N);

/// Fractional diffusion on the interior grid of [-1,1]^d; per-dimension
/// symmetric Toeplitz factors; manufactured solution sin(sum x_n); plain
/// loss. Empty c/alpha select the defaults c_n=1, alpha_n=1.5.
ProblemInstance build_riesz(int d, std::int64_t N, std::vector<double> c = {},
                            std::vector<double> alpha = {});

/// Overflow queueing generator (A+R)u = 0 on the closed grid [0,1]^d with
/// x_i = (i-1)/(N-1); mu_n = (lambda_n + (N-1)^(-alpha))/s_n; loss pins
/// u at state (1,...,1) to 1 with epsilon = 1. Empty lambda/s select the
/// defaults lambda_n = 0.01, s_n = 8n; N defaults to 100. A one-dimensional
/// null space (the stationary-distribution reading) additionally needs
/// s_n <= N-1 for every n: the full-state column of the birth-death factor
/// sums to (s_n-N+1)*mu_n, so larger s makes A+R nonsingular.
ProblemInstance build_queueing(int d, std::int64_t N = 100, double alpha = 1.0,
                               std::vector<double> lambda = {},
                               std::vector<std::int64_t> s = {});

/// Stationary distribution of the column-normalized transition structure,
/// (I-T)u = 0 on the explicit {1/3, 2/3}^d grid (N=2); mean-1 penalty with
/// epsilon = 1. Empty shifts/values select I={-13,-5,2,6}, v={1,4,3,2};
/// needs d >= 5 so the default shifts fit.
ProblemInstance build_pbn(int d, std::vector<std::int64_t> shifts = {},
                          std::vector<double> values = {});

} // namespace nnsolve
