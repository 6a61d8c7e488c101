#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "mdk/tensor.hpp"

namespace mdk {

struct HodmdConfig {
    std::size_t d = 0;            // delay index; 0 -> floor(K/5)
    double eps_svd = 5e-4;        // dimensionality-reduction tolerance
    double eps_dmd = 5e-4;        // amplitude-truncation tolerance
    double dt_seconds = 0.004;
    std::size_t min_snapshots = 100;
    std::size_t max_outer_iters = 10;

    // Optional frequency band-pass [f_lo_hz, f_hi_hz] on retained modes;
    // inactive while f_hi_hz <= f_lo_hz.
    double f_lo_hz = 0.0;
    double f_hi_hz = 0.0;

    std::size_t resolve_delay(std::size_t snapshot_count) const;
    void validate(std::size_t snapshot_count) const;
};

struct DmdMode {
    ComplexTensor u;              // unit Frobenius norm
    double a = 0.0;               // non-negative amplitude
    double delta = 0.0;           // growth rate (1/s)
    double omega = 0.0;           // angular frequency (rad/s)
    std::complex<double> mu;      // discrete eigenvalue exp((delta+i omega) dt)
};

/// Delay-window view of the one-step dynamics: suplementary diagnostic output
/// exposing the block-companion least-squares fit.
struct KoopmanSystem {
    std::vector<Tensor> delay_windows;  // d+1 shifted windows, each [r, K-d]
    Tensor companion_operator;          // [d r, d r], last block row = R_1..R_d
};

struct DmdSpectrum {
    std::vector<DmdMode> modes;   // amplitude-descending
    double t1 = 0.0;
    double timespan = 0.0;
    double dt_seconds = 0.0;
    std::array<std::size_t, 3> retained_hosvd_ranks{};

    bool empty() const { return modes.empty(); }
};

/// Joint least-squares fit of the delayed linear recurrence
/// V_{d+1..K} = sum_i R_i V_{i..K-d+i-1} plus the assembled companion matrix.
KoopmanSystem build_koopman_system(const Tensor& reduced, std::size_t d);

/// DMD with d delays on a reduced snapshot matrix [r, K]. Steps: delay
/// embedding, SVD reduction at eps_svd, one-step operator fit, eigenpairs,
/// log(mu)/dt frequency map, global amplitude fit over all K snapshots, and
/// amplitude truncation at eps_dmd. Mode vectors come back as [r, 1] tensors.
DmdSpectrum dmd_d(const Tensor& reduced, const HodmdConfig& cfg);

/// Full pipeline on one video: HOSVD reduction and dmd_d repeated on the
/// reconstruction until the retained HOSVD ranks stop changing (or the
/// iteration cap is hit). Modes are lifted to pixel space.
struct HodmdResult {
    DmdSpectrum spectrum;
    Tensor reconstruction;        // [N_x, N_y, K]
    std::size_t outer_iterations = 0;
    bool converged = false;
};
HodmdResult hodmd_iterative(const VideoSequence& seq, const HodmdConfig& cfg);

/// Mode sum of the retained spectrum (real part) at the given times.
/// `extrapolated`, when provided, reports times outside [t1, t1+T].
Tensor reconstruct(const DmdSpectrum& spec, const std::vector<double>& times,
                   bool* extrapolated = nullptr);

/// "MDSP" spectrum container: header (mode count, dt, t1, T, ranks), then one
/// record per mode (a, delta, omega, mu, u as an embedded MDTC block).
void write_spectrum_file(const std::string& path, const DmdSpectrum& spec);
DmdSpectrum read_spectrum_file(const std::string& path);

}  // namespace mdk
