#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "mdk/linalg.hpp"
#include "mdk/rng.hpp"

using namespace mdk;
using cplx = std::complex<double>;

// ---- independent oracles (no calls into the library under test) ------------

namespace {

Tensor matmul_rt(const Tensor& a, const Tensor& b) {
    Tensor c({a.dims[0], b.dims[1]}, 0.0);
    for (std::size_t i = 0; i < a.dims[0]; ++i)
        for (std::size_t k = 0; k < a.dims[1]; ++k) {
            const double aik = a.at(i, k);
            for (std::size_t j = 0; j < b.dims[1]; ++j) c.at(i, j) += aik * b.at(k, j);
        }
    return c;
}

Tensor transpose_rt(const Tensor& a) {
    Tensor t({a.dims[1], a.dims[0]});
    for (std::size_t i = 0; i < a.dims[0]; ++i)
        for (std::size_t j = 0; j < a.dims[1]; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

// Cyclic Jacobi eigensolver for symmetric matrices; returns eigenvalues
// sorted descending. Small and slow, but independent of the library.
std::vector<double> sym_eig_jacobi(Tensor a) {
    const std::size_t n = a.dims[0];
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (apq == 0.0) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = a.at(i, i);
    std::sort(vals.rbegin(), vals.rend());
    return vals;
}

Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor t({rows, cols});
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

cplx cat(const ComplexTensor& t, std::size_t i, std::size_t j) {
    const std::size_t idx = i * t.dims[1] + j;
    return {t.re[idx], t.im[idx]};
}

// Gauss-Jordan inverse with partial pivoting; oracle-side utility for the
// eigendecomposition reassembly check.
std::vector<cplx> complex_inverse(const ComplexTensor& m) {
    const std::size_t n = m.dims[0];
    std::vector<cplx> a(n * n), inv(n * n, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
        inv[i * n + i] = 1.0;
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = cat(m, i, j);
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        for (std::size_t j = 0; j < n; ++j) {
            std::swap(a[piv * n + j], a[col * n + j]);
            std::swap(inv[piv * n + j], inv[col * n + j]);
        }
        const cplx d = a[col * n + col];
        for (std::size_t j = 0; j < n; ++j) {
            a[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const cplx f = a[r * n + col];
            if (f == cplx{0.0, 0.0}) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a[r * n + j] -= f * a[col * n + j];
                inv[r * n + j] -= f * inv[col * n + j];
            }
        }
    }
    return inv;
}

double check_orthonormal(const Tensor& u) {
    const Tensor g = matmul_rt(transpose_rt(u), u);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.dims[0]; ++i)
        for (std::size_t j = 0; j < g.dims[1]; ++j)
            worst = std::max(worst, std::abs(g.at(i, j) - (i == j ? 1.0 : 0.0)));
    return worst;
}

double reconstruction_error(const Tensor& a, const SvdFactors& f) {
    Tensor us = f.u;
    for (std::size_t i = 0; i < us.dims[0]; ++i)
        for (std::size_t j = 0; j < us.dims[1]; ++j) us.at(i, j) *= f.sigma[j];
    const Tensor rec = matmul_rt(us, transpose_rt(f.v));
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = a.data[i] - rec.data[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

// ---- svd --------------------------------------------------------------------

TEST_CASE("identity has unit singular values") {
    Tensor eye({3, 3}, 0.0);
    for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    SvdFactors f = svd(eye);
    REQUIRE(f.rank() == 3);
    for (double s : f.sigma) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rank-1 outer product") {
    // u = (0, 2, 0), v = (3, 0, 0, 0): sigma = [6, 0, 0]
    Tensor a({3, 4}, 0.0);
    a.at(1, 0) = 6.0;
    SvdFactors f = svd(a);
    CHECK(f.sigma[0] == doctest::Approx(6.0).epsilon(1e-12));
    for (std::size_t i = 1; i < f.sigma.size(); ++i) CHECK(f.sigma[i] <= 1e-12);
}

TEST_CASE("planted rank-3 matrix against the jacobi oracle") {
    Rng rng(42);
    Tensor a({6, 8}, 0.0);
    for (int t = 0; t < 3; ++t) {
        Tensor u = random_tensor(6, 1, rng);
        Tensor v = random_tensor(8, 1, rng);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 8; ++j) a.at(i, j) += u.at(i, 0) * v.at(j, 0);
    }
    SvdFactors f = svd(a);

    // spectrum from an independent route: eigenvalues of A^T A. The gram
    // route squares the conditioning, so compare sigma^2 against lambda.
    const Tensor gram = matmul_rt(transpose_rt(a), a);
    std::vector<double> lam = sym_eig_jacobi(gram);
    for (std::size_t i = 0; i < f.sigma.size(); ++i)
        CHECK(std::abs(f.sigma[i] * f.sigma[i] - lam[i]) <=
              1e-12 * f.sigma[0] * f.sigma[0]);
    for (std::size_t i = 3; i < f.sigma.size(); ++i)
        CHECK(f.sigma[i] <= 1e-10 * f.sigma[0]);
}

TEST_CASE("svd contracts hold on random matrices of several shapes") {
    Rng rng(7);
    const std::vector<std::pair<std::size_t, std::size_t>> shapes = {
        {5, 5}, {8, 3}, {3, 8}, {24, 10}, {10, 24}};
    for (auto [m, n] : shapes) {
        for (int rep = 0; rep < 20; ++rep) {
            const Tensor a = random_tensor(m, n, rng);
            SvdFactors f = svd(a);
            REQUIRE(f.rank() == std::min(m, n));
            CHECK(check_orthonormal(f.u) <= 1e-10);
            CHECK(check_orthonormal(f.v) <= 1e-10);
            CHECK(reconstruction_error(a, f) <= 1e-9 * a.frobenius_norm());
            CHECK(std::is_sorted(f.sigma.rbegin(), f.sigma.rend()));
            for (std::size_t c = 0; c < f.u.dims[1]; ++c) {
                double best = 0.0;
                for (std::size_t r = 0; r < f.u.dims[0]; ++r)
                    if (std::abs(f.u.at(r, c)) > std::abs(best)) best = f.u.at(r, c);
                CHECK(best > 0.0);
            }
        }
    }
}

TEST_CASE("svd rejects non-finite input") {
    Tensor a({2, 2}, std::vector<double>{1.0, 2.0, std::nan(""), 4.0});
    CHECK_THROWS_AS(svd(a), NonFiniteError);
}

// ---- truncate -----------------------------------------------------------------

TEST_CASE("tolerance truncation keeps values above the relative threshold") {
    SvdFactors f;
    f.sigma = {10.0, 1.0, 1e-5};
    f.u = Tensor({3, 3}, 0.0);
    f.v = Tensor({3, 3}, 0.0);
    for (std::size_t i = 0; i < 3; ++i) f.u.at(i, i) = f.v.at(i, i) = 1.0;
    SvdFactors t = truncate(f, TruncationRule::by_tolerance(5e-4));
    CHECK(t.rank() == 2);
    CHECK(t.u.dims == std::vector<std::size_t>{3, 2});
}

TEST_CASE("rank truncation clamps to the available rank") {
    SvdFactors f;
    f.sigma = {3.0};
    f.u = Tensor({4, 1}, 0.5);
    f.v = Tensor({2, 1}, 0.5);
    SvdFactors t = truncate(f, TruncationRule::by_rank(5));
    CHECK(t.rank() == 1);
}

TEST_CASE("exact-rank truncation reconstructs exactly") {
    Rng rng(3);
    Tensor a({6, 5}, 0.0);
    for (int t = 0; t < 2; ++t) {
        Tensor u = random_tensor(6, 1, rng);
        Tensor v = random_tensor(5, 1, rng);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 5; ++j) a.at(i, j) += u.at(i, 0) * v.at(j, 0);
    }
    SvdFactors f = truncate(svd(a), TruncationRule::by_rank(2));
    CHECK(reconstruction_error(a, f) <= 1e-9 * a.frobenius_norm());
}

TEST_CASE("truncation error equals the discarded spectrum energy") {
    Rng rng(17);
    const Tensor a = random_tensor(12, 9, rng);
    const SvdFactors full = svd(a);
    for (std::size_t keep = 1; keep <= 8; ++keep) {
        const SvdFactors t = truncate(full, TruncationRule::by_rank(keep));
        double tail = 0.0;
        for (std::size_t i = keep; i < full.sigma.size(); ++i)
            tail += full.sigma[i] * full.sigma[i];
        const double expected = std::sqrt(tail);
        const double got = reconstruction_error(a, t);
        CHECK(std::abs(got - expected) <= 1e-9 * std::max(expected, 1e-30));
    }
}

TEST_CASE("degenerate truncation rules are rejected") {
    SvdFactors f;
    f.sigma = {1.0};
    f.u = Tensor({1, 1}, 1.0);
    f.v = Tensor({1, 1}, 1.0);
    CHECK_THROWS_AS(truncate(f, TruncationRule::by_rank(0)), ConfigError);
    CHECK_THROWS_AS(truncate(f, TruncationRule::by_tolerance(0.0)), ConfigError);
    CHECK_THROWS_AS(truncate(f, TruncationRule::by_tolerance(-1.0)), ConfigError);
}

// ---- eig ------------------------------------------------------------------------

TEST_CASE("diagonal matrix spectrum") {
    Tensor a({2, 2}, std::vector<double>{2.0, 0.0, 0.0, 3.0});
    EigPairs e = eig(a);
    std::vector<double> got = {e.values[0].real(), e.values[1].real()};
    std::sort(got.begin(), got.end());
    CHECK(got[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(got[1] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::abs(e.values[0].imag()) <= 1e-14);
}

TEST_CASE("plane rotation has unit-circle spectrum") {
    const double th = 3.14159265358979323846 / 4.0;
    Tensor a({2, 2}, std::vector<double>{std::cos(th), -std::sin(th), std::sin(th), std::cos(th)});
    EigPairs e = eig(a);
    for (const cplx& v : e.values) {
        CHECK(std::abs(std::abs(v) - 1.0) <= 1e-12);
        CHECK(std::abs(std::abs(std::arg(v)) - th) <= 1e-12);
    }
}

TEST_CASE("companion matrix of z^2 - z - 1 yields the golden-ratio roots") {
    Tensor a({2, 2}, std::vector<double>{1.0, 1.0, 1.0, 0.0});
    EigPairs e = eig(a);
    // closed-form oracle
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double psi = (1.0 - std::sqrt(5.0)) / 2.0;
    std::vector<double> got = {e.values[0].real(), e.values[1].real()};
    std::sort(got.begin(), got.end());
    CHECK(got[0] == doctest::Approx(psi).epsilon(1e-12));
    CHECK(got[1] == doctest::Approx(phi).epsilon(1e-12));
}

TEST_CASE("eigenpair residuals satisfy the accuracy contract") {
    Rng rng(23);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.next_below(6));
        const Tensor a = random_tensor(n, n, rng);
        EigPairs e = eig(a);
        const double anorm = a.frobenius_norm();
        for (std::size_t m = 0; m < n; ++m) {
            double res = 0.0, vnorm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cplx acc{0.0, 0.0};
                for (std::size_t j = 0; j < n; ++j) acc += a.at(i, j) * cat(e.vectors, j, m);
                acc -= e.values[m] * cat(e.vectors, i, m);
                res += std::norm(acc);
                vnorm += std::norm(cat(e.vectors, i, m));
            }
            CHECK(std::sqrt(res) <= 1e-8 * anorm * std::sqrt(vnorm));
        }
    }
}

TEST_CASE("eigendecomposition reassembles diagonalizable matrices") {
    Rng rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 3 + static_cast<std::size_t>(rng.next_below(3));
        const Tensor a = random_tensor(n, n, rng);
        EigPairs e = eig(a);
        const std::vector<cplx> vinv = complex_inverse(e.vectors);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                cplx acc{0.0, 0.0};
                for (std::size_t k = 0; k < n; ++k)
                    acc += cat(e.vectors, i, k) * e.values[k] * vinv[k * n + j];
                acc -= a.at(i, j);
                err += std::norm(acc);
            }
        CHECK(std::sqrt(err) <= 1e-7 * a.frobenius_norm());
    }
}

TEST_CASE("eig validates its input") {
    CHECK_THROWS_AS(eig(Tensor({2, 3}, 1.0)), ShapeError);
    Tensor bad({2, 2}, std::vector<double>{1.0, std::nan(""), 0.0, 1.0});
    CHECK_THROWS_AS(eig(bad), NonFiniteError);
}

// ---- lstsq -------------------------------------------------------------------------

namespace {

ComplexTensor complex_mat(std::size_t rows, std::size_t cols,
                          const std::vector<cplx>& vals) {
    ComplexTensor t({rows, cols});
    for (std::size_t i = 0; i < vals.size(); ++i) {
        t.re[i] = vals[i].real();
        t.im[i] = vals[i].imag();
    }
    return t;
}

}  // namespace

TEST_CASE("identity system returns the rhs") {
    ComplexTensor a = complex_mat(2, 2, {cplx{1, 0}, {}, {}, cplx{1, 0}});
    ComplexTensor b = complex_mat(2, 1, {cplx{2, 1}, cplx{-3, 0.5}});
    LstsqResult r = lstsq(a, b);
    CHECK_FALSE(r.rank_deficient);
    CHECK(cat(r.x, 0, 0) == b.re[0] + cplx{0, 1} * b.im[0]);
    CHECK(std::abs(cat(r.x, 1, 0) - cplx{-3, 0.5}) <= 1e-14);
}

TEST_CASE("overdetermined averaging system") {
    ComplexTensor a = complex_mat(2, 1, {cplx{1, 0}, cplx{1, 0}});
    ComplexTensor b = complex_mat(2, 1, {cplx{1, 0}, cplx{3, 0}});
    LstsqResult r = lstsq(a, b);
    CHECK(std::abs(cat(r.x, 0, 0) - cplx{2, 0}) <= 1e-14);
}

TEST_CASE("planted solution is recovered") {
    Rng rng(5);
    ComplexTensor a({8, 3});
    for (std::size_t i = 0; i < a.numel(); ++i) {
        a.re[i] = rng.uniform(-1.0, 1.0);
        a.im[i] = rng.uniform(-1.0, 1.0);
    }
    const std::vector<cplx> x_true = {{1.5, -0.5}, {0.0, 2.0}, {-3.0, 0.25}};
    ComplexTensor b({8, 1});
    for (std::size_t i = 0; i < 8; ++i) {
        cplx acc{0.0, 0.0};
        for (std::size_t j = 0; j < 3; ++j) acc += cat(a, i, j) * x_true[j];
        b.re[i] = acc.real();
        b.im[i] = acc.imag();
    }
    LstsqResult r = lstsq(a, b);
    CHECK_FALSE(r.rank_deficient);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(std::abs(cat(r.x, j, 0) - x_true[j]) <= 1e-9);
}

TEST_CASE("residual is orthogonal to the column space") {
    Rng rng(13);
    ComplexTensor a({10, 4});
    for (std::size_t i = 0; i < a.numel(); ++i) {
        a.re[i] = rng.uniform(-1.0, 1.0);
        a.im[i] = rng.uniform(-1.0, 1.0);
    }
    ComplexTensor b({10, 2});
    for (std::size_t i = 0; i < b.numel(); ++i) {
        b.re[i] = rng.uniform(-1.0, 1.0);
        b.im[i] = rng.uniform(-1.0, 1.0);
    }
    LstsqResult r = lstsq(a, b);
    // residual R = A x - b; require A^H R = 0
    for (std::size_t col = 0; col < 2; ++col) {
        std::vector<cplx> res(10);
        for (std::size_t i = 0; i < 10; ++i) {
            cplx acc{0.0, 0.0};
            for (std::size_t j = 0; j < 4; ++j) acc += cat(a, i, j) * cat(r.x, j, col);
            res[i] = acc - cat(b, i, col);
        }
        for (std::size_t j = 0; j < 4; ++j) {
            cplx dot{0.0, 0.0};
            for (std::size_t i = 0; i < 10; ++i) dot += std::conj(cat(a, i, j)) * res[i];
            CHECK(std::abs(dot) <= 1e-8);
        }
    }
}

TEST_CASE("rank-deficient systems are flagged and solved at minimum norm") {
    ComplexTensor a = complex_mat(3, 2, {cplx{1, 0}, cplx{1, 0}, cplx{1, 0},
                                         cplx{1, 0}, cplx{1, 0}, cplx{1, 0}});
    ComplexTensor b = complex_mat(3, 1, {cplx{2, 0}, cplx{2, 0}, cplx{2, 0}});
    LstsqResult r = lstsq(a, b);
    CHECK(r.rank_deficient);
    CHECK(r.rank == 1);
    CHECK(std::abs(cat(r.x, 0, 0) - cplx{1, 0}) <= 1e-12);
    CHECK(std::abs(cat(r.x, 1, 0) - cplx{1, 0}) <= 1e-12);
}

TEST_CASE("underdetermined shapes are rejected") {
    ComplexTensor a({2, 3});
    ComplexTensor b({2, 1});
    CHECK_THROWS_AS(lstsq(a, b), ShapeError);
}
