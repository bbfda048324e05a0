#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace morl::ad {

/// Dense row-major matrix of doubles. Shape is (rows, cols); a scalar is 1x1
/// and a batch of B feature vectors is (B, dim).
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> d;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), d(r * c, fill) {}
    static Mat row(const std::vector<double>& v) {
        Mat m(1, v.size());
        m.d = v;
        return m;
    }

    double& at(std::size_t r, std::size_t c) { return d[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return d[r * cols + c]; }
    std::size_t size() const { return d.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

namespace detail {
struct Node {
    Mat value;
    Mat grad; // allocated iff requires_grad
    bool requires_grad = false;
    std::string name; // non-empty for named parameters
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn; // accumulates into parents' grads

    void ensure_grad() {
        if (grad.size() != value.size()) grad = Mat(value.rows, value.cols, 0.0);
    }
    void zero_grad() { std::fill(grad.d.begin(), grad.d.end(), 0.0); }
};
} // namespace detail

/// Shared handle to a tape node. Ops build new nodes referencing their parents;
/// graphs are freed when the handles holding them go out of scope. Parameters
/// are long-lived leaf nodes owned by their network.
class Tensor {
  public:
    Tensor() = default;

    static Tensor constant(Mat value);
    static Tensor parameter(Mat value, std::string name);

    const Mat& value() const { return node_->value; }
    Mat& value_mut() { return node_->value; }
    const Mat& grad() const { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    const std::string& name() const { return node_->name; }
    std::size_t rows() const { return node_->value.rows; }
    std::size_t cols() const { return node_->value.cols; }
    bool defined() const { return node_ != nullptr; }
    void zero_grad() { if (node_ && node_->requires_grad) { node_->ensure_grad(); node_->zero_grad(); } }

    std::shared_ptr<detail::Node> node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

  private:
    std::shared_ptr<detail::Node> node_;
};

/// Populates gradients of every grad-requiring node reachable from `loss`.
/// `loss` must be scalar (1x1).
void backward(const Tensor& loss);

// --- graph-building operations ---------------------------------------------

Tensor matmul(const Tensor& x, const Tensor& w);           // (B,I)x(I,O) -> (B,O)
Tensor add_bias(const Tensor& x, const Tensor& b);         // (B,O) + (1,O) broadcast
Tensor add(const Tensor& a, const Tensor& b);              // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);              // elementwise
Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);
Tensor exp_(const Tensor& x);
Tensor tanh_(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor mish(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);       // pass-through grad inside range
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor sum_cols(const Tensor& x);                          // (B,D) -> (B,1)
Tensor sum_all(const Tensor& x);                           // -> scalar
Tensor mean_all(const Tensor& x);                          // -> scalar

} // namespace morl::ad
