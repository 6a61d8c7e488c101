#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "mdk/tensor.hpp"

namespace mdk {

// Synthetic inputs with known generators, shared by tests, the CLI `fixtures`
// subcommand, and the acceptance suite.

// Two damped/growing tones on separate smooth spatial patterns.
inline constexpr double kTwoToneF1Hz = 5.0;
inline constexpr double kTwoToneDelta1 = -0.5;
inline constexpr double kTwoToneF2Hz = 11.0;
inline constexpr double kTwoToneDelta2 = 0.25;
inline constexpr double kTwoToneAmp1 = 1.0;
inline constexpr double kTwoToneAmp2 = 0.3;
inline constexpr double kTwoTonePhase2 = 0.7;
inline constexpr double kTwoToneDt = 0.004;

/// 16x16x250 video at dt=4ms; optional additive Gaussian pixel noise.
VideoSequence make_two_tone_video(double noise_sigma = 0.0, std::uint64_t seed = 42);

/// Trajectory x_{k+1} = A x_k of a dense diagonalizable 4x4 system with a
/// planted spectrum {0.95 e^{+-0.3i}, 1.02, 0.90}; returns the [4, K]
/// snapshot matrix. `planted` (optional) receives the eigenvalues.
Tensor make_linear_trajectory(std::size_t snapshot_count,
                              std::vector<std::complex<double>>* planted = nullptr,
                              std::uint64_t seed = 42);

/// Toy labelled corpus: sequences whose dominant temporal frequency encodes
/// the failure age. Writes MDT tensors plus manifest.csv under dir; returns
/// the manifest path. Frequencies depend only on (seed, index), so the written
/// corpus is byte-reproducible.
std::string write_toy_corpus(const std::string& dir, std::size_t sequence_count = 60,
                             std::uint64_t seed = 42);

/// Ground-truth age for toy sequence `index` under `seed` (months).
double toy_label_months(std::uint64_t seed, std::size_t index);

}  // namespace mdk
