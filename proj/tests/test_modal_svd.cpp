#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mdk/modal_svd.hpp"
#include "mdk/rng.hpp"

using namespace mdk;

namespace {

VideoSequence wrap_video(Tensor frames) {
    VideoSequence seq;
    seq.frames = std::move(frames);
    seq.dt_seconds = 0.004;
    seq.annotation.sequence_id = "t";
    return seq;
}

double rel_err(const Tensor& got, const Tensor& want) {
    double num = 0.0;
    for (std::size_t i = 0; i < got.numel(); ++i) {
        const double d = got.data[i] - want.data[i];
        num += d * d;
    }
    const double den = want.frobenius_norm();
    return std::sqrt(num) / (den > 0.0 ? den : 1.0);
}

// Eigenvalues of the small gram matrix by cyclic Jacobi; independent route to
// the squared singular-value spectrum.
std::vector<double> gram_eigenvalues(const Tensor& a) {
    const std::size_t m = a.dims[0], n = a.dims[1];
    Tensor g({n, n}, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < m; ++r) s += a.at(r, i) * a.at(r, j);
            g.at(i, j) = s;
        }
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += g.at(p, q) * g.at(p, q);
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double gpq = g.at(p, q);
                if (gpq == 0.0) continue;
                const double theta = (g.at(q, q) - g.at(p, p)) / (2.0 * gpq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double gkp = g.at(k, p), gkq = g.at(k, q);
                    g.at(k, p) = c * gkp - s * gkq;
                    g.at(k, q) = s * gkp + c * gkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double gpk = g.at(p, k), gqk = g.at(q, k);
                    g.at(p, k) = c * gpk - s * gqk;
                    g.at(q, k) = s * gpk + c * gqk;
                }
            }
    }
    std::vector<double> lam(n);
    for (std::size_t i = 0; i < n; ++i) lam[i] = std::max(g.at(i, i), 0.0);
    std::sort(lam.rbegin(), lam.rend());
    return lam;
}

double orthonormality_defect(const Tensor& u) {
    double worst = 0.0;
    for (std::size_t a = 0; a < u.dims[1]; ++a)
        for (std::size_t b = 0; b < u.dims[1]; ++b) {
            double dot = 0.0;
            for (std::size_t r = 0; r < u.dims[0]; ++r) dot += u.at(r, a) * u.at(r, b);
            worst = std::max(worst, std::abs(dot - (a == b ? 1.0 : 0.0)));
        }
    return worst;
}

}  // namespace

TEST_CASE("separable video is exact at rank 1") {
    const std::size_t nx = 6, ny = 5, K = 9;
    Tensor frames({nx, ny, K});
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t k = 0; k < K; ++k)
                frames.at(i, j, k) = std::sin(0.3 * static_cast<double>(i * ny + j)) *
                                     (1.0 + 0.5 * static_cast<double>(k));
    VideoSequence seq = wrap_video(frames);

    SvdStageOutput out = svd_stage(seq, TruncationRule::by_rank(1));
    REQUIRE(out.modes.size() == 1);
    CHECK(out.modes[0].frobenius_norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rel_err(out.reconstructions, seq.frames) <= 1e-10);
}

TEST_CASE("white-noise truncation error matches the discarded spectrum") {
    Rng rng(42);
    Tensor frames({8, 8, 50});
    for (double& v : frames.data) v = rng.normal();
    VideoSequence seq = wrap_video(frames);

    SvdStageOutput out = svd_stage(seq, TruncationRule::by_rank(5));
    REQUIRE(out.modes.size() == 5);
    REQUIRE(out.reconstructions.dims == frames.dims);

    double err2 = 0.0;
    for (std::size_t i = 0; i < frames.numel(); ++i) {
        const double d = frames.data[i] - out.reconstructions.data[i];
        err2 += d * d;
    }
    const std::vector<double> lam = gram_eigenvalues(reshape_to_snapshot_matrix(seq));
    double tail = 0.0;
    for (std::size_t i = 5; i < lam.size(); ++i) tail += lam[i];
    CHECK(std::abs(std::sqrt(err2) - std::sqrt(tail)) <= 1e-9 * std::sqrt(tail));
}

TEST_CASE("rank-5 rule yields five modes per sequence") {
    Rng rng(9);
    std::size_t total = 0;
    for (int s = 0; s < 35; ++s) {
        Tensor frames({4, 4, 8});
        for (double& v : frames.data) v = rng.normal();
        total += svd_stage(wrap_video(frames), TruncationRule::by_rank(5)).modes.size();
    }
    CHECK(total == 175);
}

TEST_CASE("reconstructions ignore the sequence id") {
    Rng rng(4);
    Tensor frames({5, 4, 7});
    for (double& v : frames.data) v = rng.normal();
    VideoSequence a = wrap_video(frames);
    VideoSequence b = a;
    b.annotation.sequence_id = "renamed-后";
    SvdStageOutput oa = svd_stage(a, TruncationRule::by_rank(3));
    SvdStageOutput ob = svd_stage(b, TruncationRule::by_rank(3));
    CHECK(oa.reconstructions.data == ob.reconstructions.data);
}

TEST_CASE("svd_stage rejects single-frame sequences") {
    VideoSequence seq = wrap_video(Tensor({4, 4, 1}, 1.0));
    CHECK_THROWS_AS(svd_stage(seq, TruncationRule::by_rank(5)), ShapeError);
}

TEST_CASE("unfold and fold are inverse") {
    Rng rng(1);
    Tensor t({3, 4, 5});
    for (double& v : t.data) v = rng.normal();
    for (std::size_t mode = 0; mode < 3; ++mode) {
        const Tensor m = mode_unfold(t, mode);
        CHECK(m.dims[0] == t.dims[mode]);
        const Tensor back = mode_fold(m, mode, t.dims);
        CHECK(back.data == t.data);
    }
}

TEST_CASE("planted rank-(2,2,2) tensor is recovered") {
    Rng rng(11);
    const std::size_t d0 = 7, d1 = 6, d2 = 9;
    std::vector<Tensor> u = {Tensor({d0, 2}), Tensor({d1, 2}), Tensor({d2, 2})};
    for (Tensor& f : u)
        for (double& v : f.data) v = rng.normal();
    Tensor core({2, 2, 2});
    for (double& v : core.data) v = rng.normal();

    Tensor t({d0, d1, d2}, 0.0);
    for (std::size_t i = 0; i < d0; ++i)
        for (std::size_t j = 0; j < d1; ++j)
            for (std::size_t k = 0; k < d2; ++k) {
                double s = 0.0;
                for (std::size_t a = 0; a < 2; ++a)
                    for (std::size_t b = 0; b < 2; ++b)
                        for (std::size_t c = 0; c < 2; ++c)
                            s += core.at(a, b, c) * u[0].at(i, a) * u[1].at(j, b) * u[2].at(k, c);
                t.at(i, j, k) = s;
            }

    HosvdFactors f = hosvd(t, 5e-4);
    CHECK(f.retained_ranks == std::array<std::size_t, 3>{2, 2, 2});
    CHECK(f.core.dims == std::vector<std::size_t>{2, 2, 2});
    for (const Tensor& fac : f.factors) CHECK(orthonormality_defect(fac) <= 1e-10);
    CHECK(rel_err(hosvd_reconstruct(f), t) <= 1e-9);
}

TEST_CASE("constant tensor collapses to multilinear rank (1,1,1)") {
    Tensor t({4, 5, 6}, 3.25);
    HosvdFactors f = hosvd(t, 5e-4);
    CHECK(f.retained_ranks == std::array<std::size_t, 3>{1, 1, 1});
    CHECK(rel_err(hosvd_reconstruct(f), t) <= 1e-12);
}

TEST_CASE("temporal tolerance keeps exactly the planted spectrum") {
    // mode-3 singular values planted as [1, 1e-2, 1e-5] via disjoint spatial
    // supports and orthonormal temporal vectors
    const std::size_t nx = 3, ny = 2, K = 4;
    const double sig[3] = {1.0, 1e-2, 1e-5};
    Tensor t({nx, ny, K}, 0.0);
    // temporal vectors: columns of a 4x4 DCT-like orthonormal basis
    std::vector<std::vector<double>> w(3, std::vector<double>(K));
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t k = 0; k < K; ++k)
            w[p][k] = std::sqrt(2.0 / K) *
                      std::cos((3.14159265358979323846 / K) * (static_cast<double>(k) + 0.5) *
                               static_cast<double>(p + 1));
    for (std::size_t p = 0; p < 3; ++p) {
        // spatial support: single distinct pixel -> orthonormal plane vectors
        const std::size_t i = p % nx, j = p / nx;
        for (std::size_t k = 0; k < K; ++k) t.at(i, j, k) = sig[p] * w[p][k];
    }
    HosvdFactors f = hosvd(t, 5e-4);
    CHECK(f.retained_ranks[2] == 2);
}

TEST_CASE("full-rank hosvd reproduces the input") {
    Rng rng(21);
    Tensor t({4, 5, 6});
    for (double& v : t.data) v = rng.normal();
    HosvdFactors f = hosvd(t, 1e-15);
    CHECK(f.retained_ranks == std::array<std::size_t, 3>{4, 5, 6});
    CHECK(rel_err(hosvd_reconstruct(f), t) <= 1e-10);
}

TEST_CASE("zero core reconstructs to zero") {
    HosvdFactors f;
    f.core = Tensor({1, 1, 1}, 0.0);
    f.factors = {Tensor({3, 1}, 0.5), Tensor({4, 1}, 0.5), Tensor({5, 1}, 0.5)};
    f.retained_ranks = {1, 1, 1};
    const Tensor t = hosvd_reconstruct(f);
    CHECK(t.dims == std::vector<std::size_t>{3, 4, 5});
    CHECK(t.frobenius_norm() == 0.0);
}

TEST_CASE("looser tolerance never retains more directions") {
    Rng rng(33);
    Tensor t({6, 6, 10});
    for (double& v : t.data) v = rng.normal() * 0.01;
    // add structure so the spectrum decays
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            for (std::size_t k = 0; k < 10; ++k)
                t.at(i, j, k) += std::cos(0.5 * static_cast<double>(i + j)) *
                                 std::sin(0.7 * static_cast<double>(k));
    std::array<std::size_t, 3> prev{};
    bool first = true;
    for (double eps : {1e-6, 1e-4, 1e-2, 0.5}) {
        const HosvdFactors f = hosvd(t, eps);
        if (!first)
            for (std::size_t m = 0; m < 3; ++m) CHECK(f.retained_ranks[m] <= prev[m]);
        prev = f.retained_ranks;
        first = false;
    }
    CHECK_THROWS_AS(hosvd(t, 0.0), ConfigError);
}

TEST_CASE("svd_of_modes on identical images reproduces them") {
    ComplexTensor mode({3, 3});
    for (std::size_t i = 0; i < mode.numel(); ++i) {
        mode.re[i] = 0.1 * static_cast<double>(i) - 0.3;
        mode.im[i] = 0.05 * static_cast<double>(i);
    }
    SvdStageOutput out = svd_of_modes({mode, mode}, TruncationRule::by_rank(5));
    REQUIRE(out.reconstructions.dims == std::vector<std::size_t>{3, 3, 6});
    const Tensor abs = mode.abs_plane();
    const Tensor re = mode.real_plane();
    const Tensor im = mode.imag_plane();
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::abs(out.reconstructions.at(i, j, 0) - abs.at(i, j)) <= 1e-10);
            CHECK(std::abs(out.reconstructions.at(i, j, 1) - abs.at(i, j)) <= 1e-10);
            CHECK(std::abs(out.reconstructions.at(i, j, 2) - re.at(i, j)) <= 1e-10);
            CHECK(std::abs(out.reconstructions.at(i, j, 5) - im.at(i, j)) <= 1e-10);
        }
}

TEST_CASE("svd_of_modes emits three reconstructions per mode and clamps rank") {
    Rng rng(8);
    std::vector<ComplexTensor> modes;
    for (int m = 0; m < 4; ++m) {
        ComplexTensor c({5, 4});
        for (std::size_t i = 0; i < c.numel(); ++i) {
            c.re[i] = rng.normal();
            c.im[i] = rng.normal();
        }
        modes.push_back(std::move(c));
    }
    SvdStageOutput out = svd_of_modes(modes, TruncationRule::by_rank(5));
    CHECK(out.reconstructions.dims == std::vector<std::size_t>{5, 4, 12});
    // each component stack holds 4 images, so rank clamps to 4
    CHECK(out.sigma_retained.size() == 12);
    CHECK(out.modes.empty());
}

TEST_CASE("svd_of_modes needs at least two images") {
    ComplexTensor one({2, 2});
    CHECK_THROWS_AS(svd_of_modes({one}, TruncationRule::by_rank(5)), ShapeError);
}
