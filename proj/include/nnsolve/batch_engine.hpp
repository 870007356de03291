#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "nnsolve/aligned.hpp"
#include "nnsolve/fnn.hpp"
#include "nnsolve/grid.hpp"
#include "nnsolve/kernels/kernels.hpp"
#include "nnsolve/loss.hpp"
#include "nnsolve/row_oracle.hpp"

namespace nnsolve {

/// Batched residual loss and gradient for the matrix-free training loop.
///
/// A batch is a flat array of row multi-indices (batch.size() == rows * d).
/// Rows are processed in tiles: each tile gathers the distinct grid points
/// referenced by its rows, runs one batched forward pass over them, forms the
/// residuals r_k = sum_j A_kj phi(x_j) - b_k, and (when a gradient is
/// requested) runs one weighted backward pass where point j carries the
/// weight sum_k 2 lambda_k r_k A_kj. This is algebraically identical to
/// accumulating r_k * sum_j A_kj grad phi(x_j) row by row but runs on wide
/// matrix kernels.
///
/// Loss = |S|^-1 sum_k r_k^2 plus the LossSpec penalty:
///   PinComponent  eps^-1 (phi(x_pin) - 1)^2, handled as one extra row with
///                 weight eps^-1, coefficient 1 and rhs 1;
///   MeanPenalty   eps^-1 (mhat - 1)^2 with mhat = |S|^-1 sum_k phi(x_k),
///                 the mean estimated at the batch's own row points;
///   NormPenalty   eps^-1 (nhat - 1)^2 with nhat = (sum_k |phi(x_k)|^p)^(1/p).
/// The mean/norm scalars couple every row, so their gradient needs a second
/// pass over the tiles with the penalty weights folded into the same
/// backward machinery.
class BatchEngine {
public:
    BatchEngine(std::shared_ptr<const GridSpec> grid,
                std::shared_ptr<const RowOracle> oracle, LossSpec loss,
                const kern::Kernels& kernels = kern::active_kernels(),
                int tile_rows = 64);

    /// Loss over the batch; grad (param_count entries) is overwritten.
    double loss_and_grad(const NetworkParams& p, std::span<const std::int32_t> batch,
                         std::span<double> grad);

    /// Loss only (penalties included), no gradient work.
    double loss(const NetworkParams& p, std::span<const std::int32_t> batch);

    /// Raw per-row residuals a_k^T Phi - b_k; no weighting, no penalties.
    void residuals(const NetworkParams& p, std::span<const std::int32_t> batch,
                   std::span<double> out);

    const LossSpec& loss_spec() const { return loss_; }
    int tile_rows() const { return tile_rows_; }

private:
    struct U128Hash {
        std::size_t operator()(u128 v) const {
            auto mix = [](std::uint64_t x) {
                x ^= x >> 33;
                x *= 0xff51afd7ed558ccdull;
                x ^= x >> 33;
                return x;
            };
            return mix(static_cast<std::uint64_t>(v) ^
                       mix(static_cast<std::uint64_t>(v >> 64)));
        }
    };

    double run(const NetworkParams& p, std::span<const std::int32_t> batch,
               std::span<double> grad, double* per_row_residual, bool with_penalty);

    // Tile assembly: rows [row_begin, row_end) of the batch, plus the pin row
    // when pin is true; registers one center point per row when centers is
    // true. Fills the slot lists and the point coordinate block.
    void assemble_tile(std::span<const std::int32_t> batch, std::int64_t row_begin,
                       std::int64_t row_end, bool pin, bool centers);
    int slot_of(std::span<const std::int32_t> col);
    void forward_tile(const NetworkParams& p);
    void backward_tile(const NetworkParams& p, std::span<double> grad);

    std::shared_ptr<const GridSpec> grid_;
    std::shared_ptr<const RowOracle> oracle_;
    LossSpec loss_;
    const kern::Kernels& k_;
    int tile_rows_;
    Dims dims_;
    bool dense_dedup_ = false;
    double lam_res_ = 0.0; // per-row residual weight 1/|S|

    // Per-tile state. slot/val hold the concatenated row coefficient lists
    // (CSR offsets in row_off); pts_ holds point coordinates slot-major.
    std::vector<int> row_off_;
    std::vector<int> slot_;
    std::vector<double> val_;
    std::vector<double> rhs_;
    std::vector<double> lam_;
    std::vector<int> center_slot_;
    std::vector<double> pts_;
    int n_points_ = 0;
    int n_padded_ = 0;

    // Point dedup: stamped dense map for small grids, hash map otherwise.
    std::vector<std::int32_t> dense_slot_;
    std::vector<std::uint32_t> dense_epoch_;
    std::uint32_t epoch_ = 0;
    std::unordered_map<u128, int, U128Hash> map_slot_;

    RowBuffer rowbuf_;
    AlignedVector<double> x_;    // d x padded
    std::vector<AlignedVector<double>> h_; // per hidden layer, M x padded
    AlignedVector<double> phi_;
    AlignedVector<double> w_;
    AlignedVector<double> delta_, delta_prev_;
    std::vector<AlignedVector<double>> wt_; // transposed hidden weights
    std::vector<double> all_r_;      // per-row residuals (two-pass variants)
    std::vector<double> center_phi_; // phi at the row points (mean/norm)
    std::vector<double> center_w_;   // penalty weight per row point
};

} // namespace nnsolve
