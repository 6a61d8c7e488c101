#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace mdk {

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order, so walking the tape backwards visits every node after all of its
/// consumers. Scalars are 1x1 matrices.
class Tape {
public:
    int leaf(Eigen::MatrixXd value, std::string label = {});

    const Eigen::MatrixXd& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    Eigen::MatrixXd& grad(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
    const std::string& label(int id) const { return nodes_[static_cast<std::size_t>(id)].label; }

    /// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every node.
    /// `loss` must be 1x1.
    void backward(int loss);

    std::size_t size() const { return nodes_.size(); }

    // --- primitive ops ---

    int add(int a, int b);
    int scale(int x, double c);

    /// Elementwise product / quotient of same-shape operands.
    int mul(int a, int b);
    int div(int a, int b);

    int matmul(int a, int b);
    int transpose(int x);

    /// X*W + broadcast row b. W is [in, out], b is [1, out].
    int linear(int x, int w, int b);

    int slice_cols(int x, std::size_t start, std::size_t count);
    int concat_cols(const std::vector<int>& parts);

    /// Gather rows (backward scatter-adds).
    int select_rows(int x, std::vector<std::size_t> rows);

    /// Place rows of x at the given positions of a [total, cols] zero matrix.
    int scatter_rows(int x, std::vector<std::size_t> rows, std::size_t total);

    /// Repeat a [1, D] row n times (backward sums over rows).
    int broadcast_row(int x, std::size_t n);

    int softmax_rows(int x);

    /// Rowwise layer normalization with affine parameters g, b (both [1, D]).
    int layernorm(int x, int g, int b, double eps = 1e-6);

    /// Exact Gaussian-error gated activation.
    int gelu(int x);

    /// Mean over all entries of (x - target)^2; scalar output.
    int mse_against(int x, Eigen::MatrixXd target);

    /// a*x + b*y for 1x1 nodes; scalar output.
    int combine(double a, int x, double b, int y);

private:
    struct Node {
        Eigen::MatrixXd value;
        Eigen::MatrixXd grad;
        std::function<void(Tape&)> back;
        std::string label;
    };

    int push(Eigen::MatrixXd value, std::function<void(Tape&)> back, std::string label = {});
    void check_finite(int id) const;

    std::vector<Node> nodes_;
};

}  // namespace mdk
