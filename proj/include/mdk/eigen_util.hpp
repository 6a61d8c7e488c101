#pragma once

#include <Eigen/Dense>

#include "mdk/errors.hpp"
#include "mdk/tensor.hpp"

namespace mdk {

inline Eigen::MatrixXd to_eigen(const Tensor& t) {
    if (t.ndim() != 2) throw ShapeError("expected a 2-d tensor");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.dims[0]),
                      static_cast<Eigen::Index>(t.dims[1]));
    for (std::size_t i = 0; i < t.dims[0]; ++i)
        for (std::size_t j = 0; j < t.dims[1]; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at(i, j);
    return m;
}

inline Tensor from_eigen(const Eigen::MatrixXd& m) {
    Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            t.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
    return t;
}

inline Eigen::MatrixXcd to_eigen(const ComplexTensor& t) {
    if (t.dims.size() != 2) throw ShapeError("expected a 2-d complex tensor");
    const std::size_t rows = t.dims[0], cols = t.dims[1];
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t idx = i * cols + j;
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::complex<double>(t.re[idx], t.im[idx]);
        }
    return m;
}

inline ComplexTensor from_eigen_complex(const Eigen::MatrixXcd& m) {
    ComplexTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    const std::size_t cols = static_cast<std::size_t>(m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * cols + static_cast<std::size_t>(j);
            t.re[idx] = m(i, j).real();
            t.im[idx] = m(i, j).imag();
        }
    return t;
}

}  // namespace mdk
