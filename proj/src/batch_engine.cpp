#include "nnsolve/batch_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "nnsolve/errors.hpp"

namespace nnsolve {

namespace {

// Points-per-grid threshold below which a stamped dense slot map is cheaper
// than hashing (4 MiB of slots + 4 MiB of stamps at the limit).
constexpr u128 kDenseDedupLimit = u128{1} << 20;

double sgn(double v) { return (v > 0.0) - (v < 0.0); }

} // namespace

BatchEngine::BatchEngine(std::shared_ptr<const GridSpec> grid,
                         std::shared_ptr<const RowOracle> oracle, LossSpec loss,
                         const kern::Kernels& kernels, int tile_rows)
    : grid_(std::move(grid)), oracle_(std::move(oracle)), loss_(std::move(loss)),
      k_(kernels), tile_rows_(tile_rows) {
    if (!grid_ || !oracle_) throw ParamError("batch engine: grid and oracle required");
    if (tile_rows_ < 1) throw ParamError("batch engine: tile_rows must be >= 1");
    dims_ = oracle_->dims();
    if (grid_->d != dims_.d || grid_->points_per_dim() != dims_.N)
        throw ParamError("batch engine: grid and operator dimensions disagree");
    if (loss_.epsilon <= 0.0) throw ParamError("batch engine: epsilon must be positive");
    if (loss_.kind == LossSpec::Kind::NormPenalty && loss_.p < 1.0)
        throw ParamError("batch engine: norm order must be >= 1");
    if (loss_.kind == LossSpec::Kind::PinComponent) {
        if (static_cast<int>(loss_.pin_index.size()) != dims_.d)
            throw ParamError("batch engine: pin index dimension mismatch");
        for (const auto i : loss_.pin_index)
            if (i < 1 || i > dims_.N) throw ParamError("batch engine: pin index out of range");
    }
    const u128 total = grid_size(dims_.N, dims_.d);
    dense_dedup_ = total <= kDenseDedupLimit;
    if (dense_dedup_) {
        dense_slot_.resize(static_cast<std::size_t>(total));
        dense_epoch_.assign(static_cast<std::size_t>(total), 0);
    }
}

int BatchEngine::slot_of(std::span<const std::int32_t> col) {
    const u128 flat = zeta(col, dims_.N, dims_.d).value;
    if (dense_dedup_) {
        const auto idx = static_cast<std::size_t>(flat - 1);
        if (dense_epoch_[idx] == epoch_) return dense_slot_[idx];
        dense_epoch_[idx] = epoch_;
        dense_slot_[idx] = n_points_;
    } else {
        const auto [it, fresh] = map_slot_.try_emplace(flat, n_points_);
        if (!fresh) return it->second;
    }
    const int s = n_points_++;
    const auto d = static_cast<std::size_t>(dims_.d);
    pts_.resize(pts_.size() + d);
    grid_->point_of(col, std::span<double>(pts_.data() + static_cast<std::size_t>(s) * d, d));
    return s;
}

void BatchEngine::assemble_tile(std::span<const std::int32_t> batch, std::int64_t row_begin,
                                std::int64_t row_end, bool pin, bool centers) {
    const int d = dims_.d;
    if (dense_dedup_ && ++epoch_ == 0) {
        std::fill(dense_epoch_.begin(), dense_epoch_.end(), 0u);
        epoch_ = 1;
    }
    if (!dense_dedup_) map_slot_.clear();
    n_points_ = 0;
    pts_.clear();
    row_off_.assign(1, 0);
    slot_.clear();
    val_.clear();
    rhs_.clear();
    lam_.clear();
    center_slot_.clear();

    for (std::int64_t r = row_begin; r < row_end; ++r) {
        const std::span<const std::int32_t> kidx{
            batch.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(d),
            static_cast<std::size_t>(d)};
        const double b = oracle_->row_and_rhs(kidx, rowbuf_);
        for (std::size_t i = 0; i < rowbuf_.size(); ++i) {
            slot_.push_back(slot_of(rowbuf_.col(i)));
            val_.push_back(rowbuf_.val(i));
        }
        row_off_.push_back(static_cast<int>(slot_.size()));
        rhs_.push_back(b);
        lam_.push_back(lam_res_);
        center_slot_.push_back(centers ? slot_of(kidx) : -1);
    }
    if (pin) {
        slot_.push_back(slot_of(loss_.pin_index));
        val_.push_back(1.0);
        row_off_.push_back(static_cast<int>(slot_.size()));
        rhs_.push_back(1.0);
        lam_.push_back(1.0 / loss_.epsilon);
        center_slot_.push_back(-1);
    }

    n_padded_ = kern::pad_points(n_points_);
    const auto ld = static_cast<std::size_t>(n_padded_);
    x_.resize(static_cast<std::size_t>(d) * ld);
    for (int i = 0; i < d; ++i) {
        double* xr = x_.data() + static_cast<std::size_t>(i) * ld;
        for (int s = 0; s < n_points_; ++s)
            xr[s] = pts_[static_cast<std::size_t>(s) * static_cast<std::size_t>(d) +
                         static_cast<std::size_t>(i)];
        std::fill(xr + n_points_, xr + n_padded_, 0.0);
    }
}

void BatchEngine::forward_tile(const NetworkParams& p) {
    const int M = p.arch.M, L = p.arch.L, P = n_padded_;
    const auto sz = static_cast<std::size_t>(M) * static_cast<std::size_t>(P);
    h_.resize(static_cast<std::size_t>(L - 1));
    for (auto& h : h_)
        if (h.size() < sz) h.resize(sz);
    k_.affine_relu(M, dims_.d, P, p.w(1).data(), p.b(1).data(), x_.data(), h_[0].data());
    for (int l = 2; l <= L - 1; ++l)
        k_.affine_relu(M, M, P, p.w(l).data(), p.b(l).data(),
                       h_[static_cast<std::size_t>(l - 2)].data(),
                       h_[static_cast<std::size_t>(l - 1)].data());
    if (phi_.size() < static_cast<std::size_t>(P)) phi_.resize(static_cast<std::size_t>(P));
    k_.col_dot(M, P, h_[static_cast<std::size_t>(L - 2)].data(), p.a().data(), phi_.data());
}

void BatchEngine::backward_tile(const NetworkParams& p, std::span<double> grad) {
    const int M = p.arch.M, L = p.arch.L, P = n_padded_;
    const auto sz = static_cast<std::size_t>(M) * static_cast<std::size_t>(P);
    if (delta_.size() < sz) delta_.resize(sz);
    if (delta_prev_.size() < sz) delta_prev_.resize(sz);
    const double* htop = h_[static_cast<std::size_t>(L - 2)].data();
    k_.top_delta(M, P, p.a().data(), w_.data(), htop, delta_.data());
    k_.acc_gemv(M, P, htop, w_.data(), grad.data() + p.a_offset());
    double* dcur = delta_.data();
    double* dprev = delta_prev_.data();
    for (int l = L - 1; l >= 1; --l) {
        const double* below = l == 1 ? x_.data() : h_[static_cast<std::size_t>(l - 2)].data();
        k_.acc_outer(M, p.in_dim(l), P, dcur, below, grad.data() + p.w_offset(l));
        k_.acc_rowsum(M, P, dcur, grad.data() + p.b_offset(l));
        if (l > 1) {
            k_.back_delta(M, M, P, wt_[static_cast<std::size_t>(l - 2)].data(), dcur,
                          h_[static_cast<std::size_t>(l - 2)].data(), dprev);
            std::swap(dcur, dprev);
        }
    }
}

double BatchEngine::run(const NetworkParams& p, std::span<const std::int32_t> batch,
                        std::span<double> grad, double* per_row_residual, bool with_penalty) {
    const int d = dims_.d;
    if (p.arch.d != d) throw ParamError("batch engine: network input dimension mismatch");
    if (batch.empty() || batch.size() % static_cast<std::size_t>(d) != 0)
        throw ParamError("batch engine: batch must hold a positive number of multi-indices");
    const auto B = static_cast<std::int64_t>(batch.size() / static_cast<std::size_t>(d));
    lam_res_ = 1.0 / static_cast<double>(B);

    const bool want_grad = !grad.empty();
    if (want_grad) {
        if (grad.size() != param_count(p.arch))
            throw ParamError("batch engine: gradient buffer size mismatch");
        std::fill(grad.begin(), grad.end(), 0.0);
        const auto M = static_cast<std::size_t>(p.arch.M);
        wt_.resize(static_cast<std::size_t>(std::max(0, p.arch.L - 2)));
        for (int l = 2; l <= p.arch.L - 1; ++l) {
            auto& t = wt_[static_cast<std::size_t>(l - 2)];
            t.resize(M * M);
            const auto w = p.w(l);
            for (std::size_t i = 0; i < M; ++i)
                for (std::size_t j = 0; j < M; ++j) t[j * M + i] = w[i * M + j];
        }
    }

    const auto kind = loss_.kind;
    const bool pin = with_penalty && kind == LossSpec::Kind::PinComponent;
    const bool centers = with_penalty && (kind == LossSpec::Kind::MeanPenalty ||
                                          kind == LossSpec::Kind::NormPenalty);
    const bool two_pass = want_grad && centers;
    if (centers) center_phi_.assign(static_cast<std::size_t>(B), 0.0);
    if (two_pass) all_r_.assign(static_cast<std::size_t>(B), 0.0);

    double loss = 0.0;
    for (std::int64_t t0 = 0; t0 < B; t0 += tile_rows_) {
        const std::int64_t t1 = std::min<std::int64_t>(B, t0 + tile_rows_);
        assemble_tile(batch, t0, t1, pin && t1 == B, centers);
        forward_tile(p);
        const int rows = static_cast<int>(row_off_.size()) - 1;
        if (want_grad && !two_pass) {
            if (w_.size() < static_cast<std::size_t>(n_padded_))
                w_.resize(static_cast<std::size_t>(n_padded_));
            std::fill(w_.begin(), w_.begin() + n_padded_, 0.0);
        }
        double tile_loss = 0.0;
        for (int r = 0; r < rows; ++r) {
            double s1 = 0.0;
            for (int i = row_off_[static_cast<std::size_t>(r)];
                 i < row_off_[static_cast<std::size_t>(r) + 1]; ++i)
                s1 += val_[static_cast<std::size_t>(i)] *
                      phi_[static_cast<std::size_t>(slot_[static_cast<std::size_t>(i)])];
            const double res = s1 - rhs_[static_cast<std::size_t>(r)];
            if (!std::isfinite(res)) {
                const std::int64_t br = t0 + r;
                std::string at = br < B
                    ? zeta(batch.subspan(static_cast<std::size_t>(br) * static_cast<std::size_t>(d),
                                         static_cast<std::size_t>(d)), dims_.N, d).to_string()
                    : std::string("pin");
                throw NumericError("batch engine: non-finite residual at row " + at);
            }
            tile_loss += lam_[static_cast<std::size_t>(r)] * res * res;
            if (per_row_residual) per_row_residual[t0 + r] = res;
            if (two_pass) all_r_[static_cast<std::size_t>(t0 + r)] = res;
            if (want_grad && !two_pass) {
                const double c = 2.0 * lam_[static_cast<std::size_t>(r)] * res;
                for (int i = row_off_[static_cast<std::size_t>(r)];
                     i < row_off_[static_cast<std::size_t>(r) + 1]; ++i)
                    w_[static_cast<std::size_t>(slot_[static_cast<std::size_t>(i)])] +=
                        c * val_[static_cast<std::size_t>(i)];
            }
            if (centers && r < static_cast<int>(t1 - t0))
                center_phi_[static_cast<std::size_t>(t0 + r)] =
                    phi_[static_cast<std::size_t>(center_slot_[static_cast<std::size_t>(r)])];
        }
        loss += tile_loss;
        if (want_grad && !two_pass) backward_tile(p, grad);
    }

    if (centers) {
        const double eps = loss_.epsilon;
        if (kind == LossSpec::Kind::MeanPenalty) {
            double mhat = 0.0;
            for (const double v : center_phi_) mhat += v;
            mhat /= static_cast<double>(B);
            loss += (mhat - 1.0) * (mhat - 1.0) / eps;
            if (two_pass)
                center_w_.assign(static_cast<std::size_t>(B),
                                 2.0 * (mhat - 1.0) / (eps * static_cast<double>(B)));
        } else {
            const double pw = loss_.p;
            double s = 0.0;
            for (const double v : center_phi_) s += std::pow(std::abs(v), pw);
            const double nhat = std::pow(s, 1.0 / pw);
            loss += (nhat - 1.0) * (nhat - 1.0) / eps;
            if (two_pass) {
                center_w_.assign(static_cast<std::size_t>(B), 0.0);
                if (nhat > 0.0) {
                    const double f = 2.0 * (nhat - 1.0) / (eps * std::pow(nhat, pw - 1.0));
                    for (std::int64_t i = 0; i < B; ++i) {
                        const double v = center_phi_[static_cast<std::size_t>(i)];
                        center_w_[static_cast<std::size_t>(i)] =
                            f * sgn(v) * std::pow(std::abs(v), pw - 1.0);
                    }
                }
            }
        }
    }
    if (!std::isfinite(loss)) throw NumericError("batch engine: non-finite loss");

    if (two_pass) {
        for (std::int64_t t0 = 0; t0 < B; t0 += tile_rows_) {
            const std::int64_t t1 = std::min<std::int64_t>(B, t0 + tile_rows_);
            assemble_tile(batch, t0, t1, false, true);
            forward_tile(p);
            if (w_.size() < static_cast<std::size_t>(n_padded_))
                w_.resize(static_cast<std::size_t>(n_padded_));
            std::fill(w_.begin(), w_.begin() + n_padded_, 0.0);
            const int rows = static_cast<int>(row_off_.size()) - 1;
            for (int r = 0; r < rows; ++r) {
                const double c =
                    2.0 * lam_[static_cast<std::size_t>(r)] * all_r_[static_cast<std::size_t>(t0 + r)];
                for (int i = row_off_[static_cast<std::size_t>(r)];
                     i < row_off_[static_cast<std::size_t>(r) + 1]; ++i)
                    w_[static_cast<std::size_t>(slot_[static_cast<std::size_t>(i)])] +=
                        c * val_[static_cast<std::size_t>(i)];
                w_[static_cast<std::size_t>(center_slot_[static_cast<std::size_t>(r)])] +=
                    center_w_[static_cast<std::size_t>(t0 + r)];
            }
            backward_tile(p, grad);
        }
    }
    return loss;
}

double BatchEngine::loss_and_grad(const NetworkParams& p, std::span<const std::int32_t> batch,
                                  std::span<double> grad) {
    if (grad.empty()) throw ParamError("batch engine: gradient buffer required");
    return run(p, batch, grad, nullptr, true);
}

double BatchEngine::loss(const NetworkParams& p, std::span<const std::int32_t> batch) {
    return run(p, batch, {}, nullptr, true);
}

void BatchEngine::residuals(const NetworkParams& p, std::span<const std::int32_t> batch,
                            std::span<double> out) {
    const auto d = static_cast<std::size_t>(dims_.d);
    if (out.size() * d != batch.size())
        throw ParamError("batch engine: residual buffer size mismatch");
    run(p, batch, {}, out.data(), false);
}

} // namespace nnsolve
