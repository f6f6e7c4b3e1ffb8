#pragma once

// Minimal dense-tensor reverse-mode autodiff.
//
// Tensors are shared handles onto graph nodes. Every op whose inputs require
// gradients records a node holding its inputs and a local backward rule, so
// the graph is rebuilt on each forward pass (define-by-run). backward() orders
// the nodes reachable from a scalar loss into a Tape and replays it in reverse.
//
// All tensors are rank 1 or rank 2, row-major, 64-bit.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace thermocast::ndgrad {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool has_grad = false;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad, accumulates into the inputs that require grad.
  std::function<void(Node&)> backward;

  void ensure_grad();
  bool is_leaf() const { return inputs.empty(); }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  // Column vector [n x 1].
  static Tensor column(std::vector<double> values);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t i) const;
  std::size_t size() const;
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_op_result(Shape, std::vector<double>, std::vector<Tensor>, const char*,
                               std::function<void(detail::Node&)>);
  std::shared_ptr<detail::Node> node_;
};

// Builds an op output. The backward rule is kept only when gradients are
// enabled and some input requires them.
Tensor make_op_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                      const char* op, std::function<void(detail::Node&)> backward);

// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// ---- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor shift(const Tensor& a, double offset);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);

// a[m x n] + bias[n], broadcast over rows.
Tensor add_bias(const Tensor& a, const Tensor& bias);
// a[m x n] (+|*) c[m x 1], broadcast over columns.
Tensor add_col(const Tensor& a, const Tensor& c);
Tensor mul_col(const Tensor& a, const Tensor& c);

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor concat_rows(const std::vector<Tensor>& parts);
// Running sum along each row.
Tensor cumsum_cols(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Mean Huber loss with knee `delta`; throws ConfigError for delta <= 0.
Tensor huber_loss(const Tensor& pred, const Tensor& target, double delta = 1.0);
// Mean binary cross-entropy; probabilities are clamped to [1e-7, 1 - 1e-7].
Tensor bce_loss(const Tensor& prob, const Tensor& label);
// Identity forward, gradient multiplied by -lambda backward.
Tensor grad_reverse(const Tensor& x, double lambda);

// ---- backward ----------------------------------------------------------------

// Reachable subgraph in topological order (inputs before outputs).
class Tape {
 public:
  struct Entry {
    detail::Node* node;
    const char* op;
    std::vector<std::size_t> inputs;  // positions within the tape
  };

  static Tape record(const Tensor& root);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
};

// Populates gradients of `loss` w.r.t. every requires-grad ancestor. Leaf
// gradients accumulate across calls; intermediate gradients are recomputed.
void backward(const Tensor& loss);

}  // namespace thermocast::ndgrad
