#include "mdk/modal_svd.hpp"

#include <algorithm>

#include "mdk/eigen_util.hpp"
#include "mdk/errors.hpp"

namespace mdk {

Tensor mode_unfold(const Tensor& t, std::size_t mode) {
    if (t.ndim() != 3) throw ShapeError("mode_unfold: expected a 3-way tensor");
    if (mode > 2) throw ShapeError("mode_unfold: mode out of range");
    const std::size_t d0 = t.dims[0], d1 = t.dims[1], d2 = t.dims[2];

    std::size_t rows = t.dims[mode];
    Tensor m({rows, t.numel() / rows});
    for (std::size_t i = 0; i < d0; ++i)
        for (std::size_t j = 0; j < d1; ++j)
            for (std::size_t k = 0; k < d2; ++k) {
                const double v = t.at(i, j, k);
                switch (mode) {
                    case 0: m.at(i, j * d2 + k) = v; break;
                    case 1: m.at(j, i * d2 + k) = v; break;
                    default: m.at(k, i * d1 + j) = v; break;
                }
            }
    return m;
}

Tensor mode_fold(const Tensor& mat, std::size_t mode, const std::vector<std::size_t>& dims) {
    if (dims.size() != 3) throw ShapeError("mode_fold: expected 3 target dims");
    if (mode > 2) throw ShapeError("mode_fold: mode out of range");
    if (mat.dims[0] != dims[mode] || mat.numel() != detail::checked_product(dims))
        throw ShapeError("mode_fold: matrix shape does not match target dims");
    const std::size_t d1 = dims[1], d2 = dims[2];

    Tensor t(dims);
    for (std::size_t i = 0; i < dims[0]; ++i)
        for (std::size_t j = 0; j < d1; ++j)
            for (std::size_t k = 0; k < d2; ++k) {
                switch (mode) {
                    case 0: t.at(i, j, k) = mat.at(i, j * d2 + k); break;
                    case 1: t.at(i, j, k) = mat.at(j, i * d2 + k); break;
                    default: t.at(i, j, k) = mat.at(k, i * d1 + j); break;
                }
            }
    return t;
}

namespace {

// t x_mode op(u): contracts dimension `mode` with u (or u^T).
Tensor mode_product(const Tensor& t, const Tensor& u, std::size_t mode, bool transpose_u) {
    const Eigen::MatrixXd um = to_eigen(u);
    const Eigen::MatrixXd unf = to_eigen(mode_unfold(t, mode));
    const Eigen::MatrixXd res = transpose_u ? (um.transpose() * unf).eval()
                                            : (um * unf).eval();
    std::vector<std::size_t> dims = t.dims;
    dims[mode] = static_cast<std::size_t>(res.rows());
    return mode_fold(from_eigen(res), mode, dims);
}

Tensor low_rank_product(const SvdFactors& f) {
    Eigen::MatrixXd us = to_eigen(f.u);
    for (Eigen::Index j = 0; j < us.cols(); ++j)
        us.col(j) *= f.sigma[static_cast<std::size_t>(j)];
    return from_eigen(us * to_eigen(f.v).transpose());
}

}  // namespace

SvdStageOutput svd_stage(const VideoSequence& seq, const TruncationRule& rule) {
    seq.validate();
    if (seq.frame_count() < 2)
        throw ShapeError("svd_stage: need at least 2 frames");

    const Tensor mat = reshape_to_snapshot_matrix(seq);
    const SvdFactors f = truncate(svd(mat), rule);

    SvdStageOutput out;
    out.sigma_retained = f.sigma;
    out.modes.reserve(f.rank());
    for (std::size_t c = 0; c < f.rank(); ++c) {
        Tensor col({seq.nx() * seq.ny(), 1});
        for (std::size_t r = 0; r < col.dims[0]; ++r) col.at(r, 0) = f.u.at(r, c);
        out.modes.push_back(col.reshaped({seq.nx(), seq.ny()}));
    }
    out.reconstructions = snapshot_matrix_to_video(low_rank_product(f), seq.nx(), seq.ny());
    return out;
}

HosvdFactors hosvd(const Tensor& t, double eps) {
    if (t.ndim() != 3) throw ShapeError("hosvd: expected a 3-way tensor");
    if (!(eps > 0.0)) throw ConfigError("hosvd: tolerance must be positive");

    const TruncationRule rule = TruncationRule::by_tolerance(eps);
    HosvdFactors out;
    Tensor core = t;
    for (std::size_t mode = 0; mode < 3; ++mode) {
        const SvdFactors f = truncate(svd(mode_unfold(t, mode)), rule);
        out.factors[mode] = f.u;
        out.retained_ranks[mode] = f.rank();
        core = mode_product(core, f.u, mode, /*transpose_u=*/true);
    }
    out.core = core;
    return out;
}

Tensor hosvd_reconstruct(const HosvdFactors& f) {
    Tensor t = f.core;
    for (std::size_t mode = 0; mode < 3; ++mode)
        t = mode_product(t, f.factors[mode], mode, /*transpose_u=*/false);
    return t;
}

SvdStageOutput svd_of_modes(const std::vector<ComplexTensor>& modes,
                            const TruncationRule& rule) {
    if (modes.size() < 2)
        throw ShapeError("svd_of_modes: need at least 2 mode images");
    const std::vector<std::size_t> dims = modes[0].dims;
    if (dims.size() != 2) throw ShapeError("svd_of_modes: modes must be 2-d images");
    for (const ComplexTensor& m : modes)
        if (m.dims != dims) throw ShapeError("svd_of_modes: mixed mode shapes");

    const std::size_t np = dims[0] * dims[1];
    const std::size_t count = modes.size();

    SvdStageOutput out;
    out.reconstructions = Tensor({dims[0], dims[1], 3 * count});
    std::size_t frame = 0;
    for (int comp = 0; comp < 3; ++comp) {
        Tensor stack({np, count});
        for (std::size_t m = 0; m < count; ++m) {
            const Tensor plane = comp == 0   ? modes[m].abs_plane()
                                 : comp == 1 ? modes[m].real_plane()
                                             : modes[m].imag_plane();
            for (std::size_t p = 0; p < np; ++p) stack.at(p, m) = plane.data[p];
        }
        const SvdFactors f = truncate(svd(stack), rule);
        for (double s : f.sigma) out.sigma_retained.push_back(s);
        const Tensor rec = low_rank_product(f);
        for (std::size_t m = 0; m < count; ++m, ++frame)
            for (std::size_t i = 0; i < dims[0]; ++i)
                for (std::size_t j = 0; j < dims[1]; ++j)
                    out.reconstructions.at(i, j, frame) = rec.at(i * dims[1] + j, m);
    }
    return out;
}

}  // namespace mdk
