#include "mdk/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "mdk/eigen_util.hpp"
#include "mdk/errors.hpp"

namespace mdk {

namespace {

void require_finite(const Tensor& a, const char* what) {
    if (!a.all_finite()) throw NonFiniteError(std::string(what) + ": non-finite input");
}

// Flips signs so the largest-magnitude entry of each U column is positive,
// compensating in V. Ties break toward the lowest row index.
void apply_sign_convention(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
        Eigen::Index best = 0;
        double best_abs = -1.0;
        for (Eigen::Index r = 0; r < u.rows(); ++r) {
            const double a = std::abs(u(r, c));
            if (a > best_abs) {
                best_abs = a;
                best = r;
            }
        }
        if (u(best, c) < 0.0) {
            u.col(c) = -u.col(c);
            if (c < v.cols()) v.col(c) = -v.col(c);
        }
    }
}

}  // namespace

std::size_t TruncationRule::retained(const std::vector<double>& sigma) const {
    if (sigma.empty()) return 0;
    if (kind == Kind::Rank) {
        if (rank == 0) throw ConfigError("truncation rank must be positive");
        return std::min(rank, sigma.size());
    }
    if (!(tolerance > 0.0)) throw ConfigError("truncation tolerance must be positive");
    if (sigma[0] <= 0.0) return 1;
    std::size_t keep = 0;
    for (double s : sigma)
        if (s / sigma[0] > tolerance) ++keep;
    return std::max<std::size_t>(keep, 1);
}

SvdFactors svd(const Tensor& a) {
    if (a.ndim() != 2) throw ShapeError("svd: expected a 2-d tensor");
    require_finite(a, "svd");
    const Eigen::MatrixXd m = to_eigen(a);

    Eigen::MatrixXd u, v;
    Eigen::VectorXd s;
    // JacobiSVD is more accurate on small problems; BDCSVD scales better.
    if (std::max(m.rows(), m.cols()) <= 16) {
        Eigen::JacobiSVD<Eigen::MatrixXd> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        u = dec.matrixU();
        s = dec.singularValues();
        v = dec.matrixV();
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        u = dec.matrixU();
        s = dec.singularValues();
        v = dec.matrixV();
    }
    apply_sign_convention(u, v);

    SvdFactors f;
    f.u = from_eigen(u);
    f.v = from_eigen(v);
    f.sigma.assign(s.data(), s.data() + s.size());
    return f;
}

SvdFactors truncate(const SvdFactors& f, const TruncationRule& rule) {
    const std::size_t keep = rule.retained(f.sigma);
    if (keep == f.sigma.size()) return f;

    SvdFactors out;
    out.sigma.assign(f.sigma.begin(), f.sigma.begin() + static_cast<std::ptrdiff_t>(keep));
    const std::size_t m = f.u.dims[0], n = f.v.dims[0];
    out.u = Tensor({m, keep});
    out.v = Tensor({n, keep});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < keep; ++j) out.u.at(i, j) = f.u.at(i, j);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < keep; ++j) out.v.at(i, j) = f.v.at(i, j);
    return out;
}

Tensor svd_reconstruct(const SvdFactors& f) {
    const Eigen::MatrixXd u = to_eigen(f.u);
    const Eigen::MatrixXd v = to_eigen(f.v);
    Eigen::VectorXd s(static_cast<Eigen::Index>(f.sigma.size()));
    for (std::size_t i = 0; i < f.sigma.size(); ++i)
        s(static_cast<Eigen::Index>(i)) = f.sigma[i];
    return from_eigen(u * s.asDiagonal() * v.transpose());
}

EigPairs eig(const Tensor& a) {
    if (a.ndim() != 2 || a.dims[0] != a.dims[1])
        throw ShapeError("eig: expected a square matrix");
    require_finite(a, "eig");
    const Eigen::MatrixXd m = to_eigen(a);

    Eigen::EigenSolver<Eigen::MatrixXd> dec(m, /*computeEigenvectors=*/true);
    if (dec.info() != Eigen::Success)
        throw ConvergenceError("eig: iteration failed to converge");

    const Eigen::VectorXcd vals = dec.eigenvalues();
    const Eigen::MatrixXcd vecs = dec.eigenvectors();

    EigPairs out;
    out.values.assign(vals.data(), vals.data() + vals.size());
    out.vectors = from_eigen_complex(Eigen::MatrixXcd(vecs));
    return out;
}

LstsqResult lstsq(const ComplexTensor& a, const ComplexTensor& b) {
    if (a.dims.size() != 2 || b.dims.size() != 2)
        throw ShapeError("lstsq: expected 2-d operands");
    if (a.dims[0] != b.dims[0])
        throw ShapeError("lstsq: row counts differ");
    if (a.dims[0] < a.dims[1])
        throw ShapeError("lstsq: underdetermined system (m < n)");

    const Eigen::MatrixXcd am = to_eigen(a);
    const Eigen::MatrixXcd bm = to_eigen(b);

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(am);
    const Eigen::MatrixXcd x = cod.solve(bm);

    LstsqResult out;
    out.x = from_eigen_complex(x);
    out.rank = static_cast<std::size_t>(cod.rank());
    out.rank_deficient = out.rank < a.dims[1];
    return out;
}

}  // namespace mdk
