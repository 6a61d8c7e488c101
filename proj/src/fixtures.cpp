#include "mdk/fixtures.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "mdk/io.hpp"
#include "mdk/rng.hpp"

namespace mdk {

namespace {

constexpr double kTau = 6.28318530717958647692;

double two_tone_pattern1(std::size_t i, std::size_t j) {
    return std::sin(kTau / 2.0 * (static_cast<double>(i) + 1.0) / 17.0) *
           std::sin(kTau / 2.0 * (static_cast<double>(j) + 1.0) / 17.0);
}

double two_tone_pattern2(std::size_t i, std::size_t j) {
    return std::cos(kTau * static_cast<double>(i) / 16.0) *
           std::sin(kTau / 2.0 * (static_cast<double>(j) + 1.0) / 17.0);
}

}  // namespace

VideoSequence make_two_tone_video(double noise_sigma, std::uint64_t seed) {
    const std::size_t nx = 16, ny = 16, K = 250;
    VideoSequence seq;
    seq.frames = Tensor({nx, ny, K});
    seq.dt_seconds = kTwoToneDt;
    seq.annotation.sequence_id = noise_sigma > 0.0 ? "two-tone-noisy" : "two-tone";
    seq.annotation.heart_state = HeartState::Other;
    seq.annotation.state_label = "SYN";

    Rng noise = derive_rng(seed, "two-tone-noise");
    for (std::size_t k = 0; k < K; ++k) {
        const double t = static_cast<double>(k) * kTwoToneDt;
        const double tone1 = kTwoToneAmp1 * std::exp(kTwoToneDelta1 * t) *
                             std::cos(kTau * kTwoToneF1Hz * t);
        const double tone2 = kTwoToneAmp2 * std::exp(kTwoToneDelta2 * t) *
                             std::cos(kTau * kTwoToneF2Hz * t + kTwoTonePhase2);
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j < ny; ++j)
                seq.frames.at(i, j, k) = two_tone_pattern1(i, j) * tone1 +
                                         two_tone_pattern2(i, j) * tone2 +
                                         (noise_sigma > 0.0 ? noise_sigma * noise.normal() : 0.0);
    }
    return seq;
}

Tensor make_linear_trajectory(std::size_t snapshot_count,
                              std::vector<std::complex<double>>* planted,
                              std::uint64_t seed) {
    const double rho = 0.95, theta = 0.3;
    Eigen::Matrix4d b = Eigen::Matrix4d::Zero();
    b(0, 0) = rho * std::cos(theta);
    b(0, 1) = -rho * std::sin(theta);
    b(1, 0) = rho * std::sin(theta);
    b(1, 1) = rho * std::cos(theta);
    b(2, 2) = 1.02;
    b(3, 3) = 0.90;

    Rng rng = derive_rng(seed, "linear-system");
    Eigen::Matrix4d q;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            q(i, j) = (i == j ? 2.0 : 0.0) + rng.uniform(-0.5, 0.5);
    const Eigen::Matrix4d a = q * b * q.inverse();

    if (planted) {
        planted->clear();
        planted->push_back({rho * std::cos(theta), rho * std::sin(theta)});
        planted->push_back({rho * std::cos(theta), -rho * std::sin(theta)});
        planted->push_back({1.02, 0.0});
        planted->push_back({0.90, 0.0});
    }

    Tensor out({4, snapshot_count});
    Eigen::Vector4d x = q * Eigen::Vector4d::Ones();
    for (std::size_t k = 0; k < snapshot_count; ++k) {
        for (int i = 0; i < 4; ++i) out.at(static_cast<std::size_t>(i), k) = x(i);
        x = a * x;
    }
    return out;
}

double toy_label_months(std::uint64_t seed, std::size_t index) {
    Rng rng = derive_rng(seed, "toy-freq", index);
    const double f = 3.0 + 4.0 * rng.next_double();
    return 10.0 + 2.0 * (f - 3.0);
}

std::string write_toy_corpus(const std::string& dir, std::size_t sequence_count,
                             std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    const std::size_t nx = 16, ny = 16, K = 120;
    const double dt = 0.004;
    const char* states[3] = {"CTL", "OB", "SH"};

    std::vector<ManifestEntry> entries;
    for (std::size_t s = 0; s < sequence_count; ++s) {
        Rng freq_rng = derive_rng(seed, "toy-freq", s);
        const double f = 3.0 + 4.0 * freq_rng.next_double();
        Rng phase_rng = derive_rng(seed, "toy-phase", s);
        const double phase = kTau * phase_rng.next_double();
        Rng noise = derive_rng(seed, "toy-noise", s);

        // the blob row encodes the frequency; a centered column keeps the
        // encoding invariant under horizontal flips. Noise must stay below
        // the default spectral pruning tolerance or junk modes survive and
        // dilute mode-image fusion.
        const double row0 = 2.0 + 11.0 * (f - 3.0) / 4.0;
        const double col0 = 7.5;

        Tensor frames({nx, ny, K});
        for (std::size_t k = 0; k < K; ++k) {
            const double t = static_cast<double>(k) * dt;
            const double pulse = 0.6 + 0.4 * std::cos(kTau * f * t + phase);
            for (std::size_t i = 0; i < nx; ++i)
                for (std::size_t j = 0; j < ny; ++j) {
                    const double di = static_cast<double>(i) - row0;
                    const double dj = static_cast<double>(j) - col0;
                    const double blob = std::exp(-(di * di + dj * dj) / (2.0 * 2.0 * 2.0));
                    frames.at(i, j, k) = blob * pulse + 1e-4 * noise.normal();
                }
        }

        char name[32];
        std::snprintf(name, sizeof(name), "toy-%03zu.mdt", s);
        write_tensor_file(join_path(dir, name), frames, /*as_f32=*/true);

        ManifestEntry e;
        e.path = name;
        e.annotation.sequence_id = std::string(name, std::strlen(name) - 4);
        e.annotation.heart_state = heart_state_from_string(states[s % 3]);
        e.annotation.state_label = states[s % 3];
        e.annotation.failure_age_months = 10.0 + 2.0 * (f - 3.0);
        entries.push_back(std::move(e));
    }

    const std::string manifest = join_path(dir, "manifest.csv");
    write_manifest(manifest, entries);
    return manifest;
}

}  // namespace mdk
