#include "mdk/autograd.hpp"

#include <cmath>

#include "mdk/errors.hpp"

namespace mdk {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

int Tape::push(Eigen::MatrixXd value, std::function<void(Tape&)> back, std::string label) {
    nodes_.push_back(Node{std::move(value), Eigen::MatrixXd(), std::move(back), std::move(label)});
    Node& n = nodes_.back();
    n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
    const int id = static_cast<int>(nodes_.size()) - 1;
    check_finite(id);
    return id;
}

void Tape::check_finite(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.value.allFinite()) {
        const std::string where = n.label.empty() ? "node " + std::to_string(id) : n.label;
        throw NonFiniteError("non-finite activation at " + where);
    }
}

int Tape::leaf(Eigen::MatrixXd value, std::string label) {
    return push(std::move(value), nullptr, std::move(label));
}

void Tape::backward(int loss) {
    Node& top = nodes_[static_cast<std::size_t>(loss)];
    if (top.value.rows() != 1 || top.value.cols() != 1)
        throw ShapeError("backward: loss node must be 1x1");
    top.grad(0, 0) = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (static_cast<int>(i) > loss) continue;  // nodes past the loss cannot feed it
        if (nodes_[i].back) nodes_[i].back(*this);
    }
}

int Tape::add(int a, int b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw ShapeError("add: shape mismatch");
    Eigen::MatrixXd out = value(a) + value(b);
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [a, b, id](Tape& t) {
        t.grad(a) += t.grad(id);
        t.grad(b) += t.grad(id);
    });
}

int Tape::scale(int x, double c) {
    Eigen::MatrixXd out = value(x) * c;
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [x, c, id](Tape& t) { t.grad(x) += c * t.grad(id); });
}

int Tape::mul(int a, int b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw ShapeError("mul: shape mismatch");
    Eigen::MatrixXd out = value(a).cwiseProduct(value(b));
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [a, b, id](Tape& t) {
        t.grad(a) += t.grad(id).cwiseProduct(t.value(b));
        t.grad(b) += t.grad(id).cwiseProduct(t.value(a));
    });
}

int Tape::div(int a, int b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw ShapeError("div: shape mismatch");
    Eigen::MatrixXd out = value(a).cwiseQuotient(value(b));
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [a, b, id](Tape& t) {
        t.grad(a) += t.grad(id).cwiseQuotient(t.value(b));
        t.grad(b) -= t.grad(id).cwiseProduct(t.value(id)).cwiseQuotient(t.value(b));
    });
}

int Tape::matmul(int a, int b) {
    if (value(a).cols() != value(b).rows()) throw ShapeError("matmul: inner dims differ");
    Eigen::MatrixXd out = value(a) * value(b);
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [a, b, id](Tape& t) {
        t.grad(a) += t.grad(id) * t.value(b).transpose();
        t.grad(b) += t.value(a).transpose() * t.grad(id);
    });
}

int Tape::transpose(int x) {
    Eigen::MatrixXd out = value(x).transpose();
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [x, id](Tape& t) { t.grad(x) += t.grad(id).transpose(); });
}

int Tape::linear(int x, int w, int b) {
    if (value(x).cols() != value(w).rows()) throw ShapeError("linear: inner dims differ");
    if (value(b).rows() != 1 || value(b).cols() != value(w).cols())
        throw ShapeError("linear: bias must be [1, out]");
    Eigen::MatrixXd out = value(x) * value(w);
    out.rowwise() += value(b).row(0);
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [x, w, b, id](Tape& t) {
        t.grad(x) += t.grad(id) * t.value(w).transpose();
        t.grad(w) += t.value(x).transpose() * t.grad(id);
        t.grad(b).row(0) += t.grad(id).colwise().sum();
    });
}

int Tape::slice_cols(int x, std::size_t start, std::size_t count) {
    if (start + count > static_cast<std::size_t>(value(x).cols()))
        throw ShapeError("slice_cols: out of range");
    Eigen::MatrixXd out = value(x).middleCols(static_cast<Eigen::Index>(start),
                                              static_cast<Eigen::Index>(count));
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [x, start, count, id](Tape& t) {
        t.grad(x).middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count)) +=
            t.grad(id);
    });
}

int Tape::concat_cols(const std::vector<int>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no parts");
    Eigen::Index rows = value(parts[0]).rows(), cols = 0;
    for (int p : parts) {
        if (value(p).rows() != rows) throw ShapeError("concat_cols: row mismatch");
        cols += value(p).cols();
    }
    Eigen::MatrixXd out(rows, cols);
    Eigen::Index at = 0;
    for (int p : parts) {
        out.middleCols(at, value(p).cols()) = value(p);
        at += value(p).cols();
    }
    const int id = static_cast<int>(nodes_.size());
    std::vector<int> captured = parts;
    return push(std::move(out), [captured, id](Tape& t) {
        Eigen::Index at = 0;
        for (int p : captured) {
            const Eigen::Index c = t.value(p).cols();
            t.grad(p) += t.grad(id).middleCols(at, c);
            at += c;
        }
    });
}

int Tape::select_rows(int x, std::vector<std::size_t> rows) {
    for (std::size_t r : rows)
        if (r >= static_cast<std::size_t>(value(x).rows()))
            throw ShapeError("select_rows: row out of range");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), value(x).cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = value(x).row(static_cast<Eigen::Index>(rows[i]));
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [x, rows = std::move(rows), id](Tape& t) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            t.grad(x).row(static_cast<Eigen::Index>(rows[i])) +=
                t.grad(id).row(static_cast<Eigen::Index>(i));
    });
}

int Tape::scatter_rows(int x, std::vector<std::size_t> rows, std::size_t total) {
    if (rows.size() != static_cast<std::size_t>(value(x).rows()))
        throw ShapeError("scatter_rows: one target row per source row");
    for (std::size_t r : rows)
        if (r >= total) throw ShapeError("scatter_rows: row out of range");
    Eigen::MatrixXd out =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total), value(x).cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(rows[i])) = value(x).row(static_cast<Eigen::Index>(i));
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [x, rows = std::move(rows), id](Tape& t) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            t.grad(x).row(static_cast<Eigen::Index>(i)) +=
                t.grad(id).row(static_cast<Eigen::Index>(rows[i]));
    });
}

int Tape::broadcast_row(int x, std::size_t n) {
    if (value(x).rows() != 1) throw ShapeError("broadcast_row: source must be [1, D]");
    Eigen::MatrixXd out = value(x).replicate(static_cast<Eigen::Index>(n), 1);
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [x, id](Tape& t) {
        t.grad(x).row(0) += t.grad(id).colwise().sum();
    });
}

int Tape::softmax_rows(int x) {
    Eigen::MatrixXd out = value(x);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double m = out.row(i).maxCoeff();
        out.row(i) = (out.row(i).array() - m).exp();
        out.row(i) /= out.row(i).sum();
    }
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [x, id](Tape& t) {
        const Eigen::MatrixXd& y = t.value(id);
        const Eigen::MatrixXd& g = t.grad(id);
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            const double dot = (g.row(i).array() * y.row(i).array()).sum();
            t.grad(x).row(i) += (y.row(i).array() * (g.row(i).array() - dot)).matrix();
        }
    });
}

int Tape::layernorm(int x, int g, int b, double eps) {
    const Eigen::MatrixXd& xv = value(x);
    if (value(g).rows() != 1 || value(g).cols() != xv.cols() || value(b).rows() != 1 ||
        value(b).cols() != xv.cols())
        throw ShapeError("layernorm: affine params must be [1, D]");
    const Eigen::Index rows = xv.rows(), cols = xv.cols();
    Eigen::MatrixXd xhat(rows, cols);
    Eigen::VectorXd inv_std(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double mu = xv.row(i).mean();
        const double var = (xv.row(i).array() - mu).square().mean();
        inv_std(i) = 1.0 / std::sqrt(var + eps);
        xhat.row(i) = (xv.row(i).array() - mu) * inv_std(i);
    }
    Eigen::MatrixXd out = xhat;
    for (Eigen::Index i = 0; i < rows; ++i)
        out.row(i) = (xhat.row(i).array() * value(g).row(0).array()).matrix() + value(b).row(0);
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out),
                [x, g, b, xhat = std::move(xhat), inv_std = std::move(inv_std), id](Tape& t) {
                    const Eigen::MatrixXd& gr = t.grad(id);
                    t.grad(b).row(0) += gr.colwise().sum();
                    for (Eigen::Index i = 0; i < gr.rows(); ++i) {
                        t.grad(g).row(0) += (gr.row(i).array() * xhat.row(i).array()).matrix();
                        const Eigen::RowVectorXd dxhat =
                            (gr.row(i).array() * t.value(g).row(0).array()).matrix();
                        const double mean_dxhat = dxhat.mean();
                        const double mean_dxhat_xhat =
                            (dxhat.array() * xhat.row(i).array()).mean();
                        t.grad(x).row(i) += inv_std(i) *
                                            (dxhat.array() - mean_dxhat -
                                             xhat.row(i).array() * mean_dxhat_xhat)
                                                .matrix();
                    }
                });
}

int Tape::gelu(int x) {
    const Eigen::MatrixXd& xv = value(x);
    Eigen::MatrixXd out(xv.rows(), xv.cols());
    for (Eigen::Index i = 0; i < xv.size(); ++i) {
        const double v = xv(i);
        out(i) = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    }
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [x, id](Tape& t) {
        const Eigen::MatrixXd& xv = t.value(x);
        Eigen::MatrixXd& gx = t.grad(x);
        const Eigen::MatrixXd& g = t.grad(id);
        for (Eigen::Index i = 0; i < xv.size(); ++i) {
            const double v = xv(i);
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            gx(i) += g(i) * (cdf + v * pdf);
        }
    });
}

int Tape::mse_against(int x, Eigen::MatrixXd target) {
    const Eigen::MatrixXd& xv = value(x);
    if (xv.rows() != target.rows() || xv.cols() != target.cols())
        throw ShapeError("mse_against: shape mismatch");
    const double n = static_cast<double>(xv.size());
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = (xv - target).squaredNorm() / n;
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [x, target = std::move(target), n, id](Tape& t) {
        t.grad(x) += (2.0 / n) * t.grad(id)(0, 0) * (t.value(x) - target);
    });
}

int Tape::combine(double a, int x, double b, int y) {
    if (value(x).size() != 1 || value(y).size() != 1)
        throw ShapeError("combine: operands must be scalars");
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = a * value(x)(0, 0) + b * value(y)(0, 0);
    const int id = static_cast<int>(nodes_.size());
    return push(std::move(out), [a, x, b, y, id](Tape& t) {
        t.grad(x)(0, 0) += a * t.grad(id)(0, 0);
        t.grad(y)(0, 0) += b * t.grad(id)(0, 0);
    });
}

}  // namespace mdk
