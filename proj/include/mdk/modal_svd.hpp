#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mdk/linalg.hpp"
#include "mdk/tensor.hpp"

namespace mdk {

/// Output of a sequence-level SVD stage: retained mode images plus the
/// low-rank reconstruction of the whole video.
struct SvdStageOutput {
    std::vector<Tensor> modes;       // [N_x, N_y] each, unit Frobenius norm
    Tensor reconstructions;          // [N_x, N_y, K]
    std::vector<double> sigma_retained;
};

struct HosvdFactors {
    Tensor core;                     // [r1, r2, r3]
    std::array<Tensor, 3> factors;   // [N_x x r1], [N_y x r2], [K x r3]
    std::array<std::size_t, 3> retained_ranks{};
};

/// Mode-n unfolding of a 3-way tensor: rows index dimension n, columns run
/// over the remaining dimensions in their row-major order.
Tensor mode_unfold(const Tensor& t, std::size_t mode);
Tensor mode_fold(const Tensor& mat, std::size_t mode, const std::vector<std::size_t>& dims);

/// SVD of the snapshot matrix; keeps modes per the rule (rank 5 in the
/// reference pipeline). Requires K >= 2.
SvdStageOutput svd_stage(const VideoSequence& seq, const TruncationRule& rule);

/// Tucker decomposition via one SVD per unfolding; rank per direction is
/// chosen by the relative singular-value tolerance eps.
HosvdFactors hosvd(const Tensor& t, double eps);

Tensor hosvd_reconstruct(const HosvdFactors& f);

/// Second SVD stage over mode images. Each complex mode contributes its
/// abs/real/imag planes; each component stack is decomposed separately and
/// only reconstructions are returned (block order abs, real, imag).
SvdStageOutput svd_of_modes(const std::vector<ComplexTensor>& modes,
                            const TruncationRule& rule);

}  // namespace mdk
