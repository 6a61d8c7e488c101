#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "mdk/tensor.hpp"

namespace mdk {

/// Economy SVD factors A = U diag(sigma) V^T with orthonormal columns.
struct SvdFactors {
    Tensor u;                   // [m, r]
    std::vector<double> sigma;  // r non-negative values, non-increasing
    Tensor v;                   // [n, r]

    std::size_t rank() const { return sigma.size(); }
};

struct EigPairs {
    std::vector<std::complex<double>> values;
    ComplexTensor vectors;  // [n, n], column m pairs with values[m]
};

struct LstsqResult {
    ComplexTensor x;  // [n, k]
    bool rank_deficient = false;
    std::size_t rank = 0;
};

/// Truncation policy: a fixed rank or a relative singular-value tolerance
/// (retain k with sigma_k/sigma_0 > eps).
struct TruncationRule {
    enum class Kind { Rank, Tolerance };
    Kind kind = Kind::Rank;
    std::size_t rank = 0;
    double tolerance = 0.0;

    static TruncationRule by_rank(std::size_t r) {
        return TruncationRule{Kind::Rank, r, 0.0};
    }
    static TruncationRule by_tolerance(double eps) {
        return TruncationRule{Kind::Tolerance, 0, eps};
    }

    /// Number of values retained from a non-increasing spectrum.
    std::size_t retained(const std::vector<double>& sigma) const;
};

/// Thin SVD of a dense [m, n] matrix. Deterministic sign convention: the
/// largest-magnitude entry of each U column is made positive (ties broken by
/// the lowest row index).
SvdFactors svd(const Tensor& a);

/// Drops trailing singular triplets per the rule.
SvdFactors truncate(const SvdFactors& f, const TruncationRule& rule);

Tensor svd_reconstruct(const SvdFactors& f);

/// Eigendecomposition of a real square matrix (complex pairs allowed).
EigPairs eig(const Tensor& a);

/// Minimum-norm least squares argmin ||A x - b||_F via a rank-revealing
/// orthogonal factorization. Requires m >= n.
LstsqResult lstsq(const ComplexTensor& a, const ComplexTensor& b);

}  // namespace mdk
