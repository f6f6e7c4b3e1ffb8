#include "thermocast/ndgrad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "thermocast/errors.hpp"

namespace thermocast::ndgrad {
namespace {

thread_local bool g_grad_enabled = true;

constexpr double kProbClamp = 1e-7;

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a rank-2 tensor, got " +
                         shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

// C[m x n] += A[m x k] * B[k x n]
void gemm_acc(std::size_t m, std::size_t k, std::size_t n, const double* __restrict a,
              const double* __restrict b, double* __restrict c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* __restrict crow = c + i * n;
    const double* __restrict arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[k x n] += A[m x k]^T * G[m x n]
void gemm_at_acc(std::size_t m, std::size_t k, std::size_t n, const double* __restrict a,
                 const double* __restrict g, double* __restrict c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* __restrict arow = a + i * k;
    const double* __restrict grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      double* __restrict crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
    }
  }
}

std::vector<double> transpose(const std::vector<double>& src, std::size_t rows, std::size_t cols) {
  std::vector<double> out(src.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  return out;
}

detail::Node& input(detail::Node& self, std::size_t i) { return *self.inputs[i]; }

bool wants_grad(const detail::Node& n) { return n.requires_grad; }

template <typename F>
Tensor unary_elementwise(const Tensor& x, const char* op, F forward,
                         std::function<void(detail::Node&)> backward) {
  std::vector<double> out(x.size());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(xv[i]);
  return make_op_result(x.shape(), std::move(out), {x}, op, std::move(backward));
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void detail::Node::ensure_grad() {
  if (!has_grad) {
    grad.assign(value.size(), 0.0);
    has_grad = true;
  }
}

// ---- Tensor ------------------------------------------------------------------

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (product(shape) != values.size()) {
    throw DimensionError("tensor of shape " + shape_string(shape) + " given " +
                         std::to_string(values.size()) + " values");
  }
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n, 1}, std::move(values));
}

const Shape& Tensor::shape() const {
  if (!node_) throw UsageError("use of an undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t i) const {
  if (i >= rank()) throw DimensionError("dimension index out of range");
  return shape()[i];
}

std::size_t Tensor::size() const { return values().size(); }

std::size_t Tensor::rows() const {
  require_rank2(*this, "rows");
  return shape()[0];
}

std::size_t Tensor::cols() const {
  require_rank2(*this, "cols");
  return shape()[1];
}

std::span<const double> Tensor::values() const {
  if (!node_) throw UsageError("use of an undefined tensor");
  return node_->value;
}

std::span<double> Tensor::mutable_values() {
  if (!node_) throw UsageError("use of an undefined tensor");
  return node_->value;
}

double Tensor::item() const {
  if (size() != 1) {
    throw UsageError("item() on a tensor of shape " + shape_string(shape()));
  }
  return node_->value[0];
}

double Tensor::at(std::size_t i) const { return values()[i]; }

double Tensor::at(std::size_t r, std::size_t c) const { return values()[r * cols() + c]; }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  if (!is_leaf()) throw UsageError("requires_grad can only be toggled on leaf tensors");
  node_->requires_grad = flag;
}

bool Tensor::is_leaf() const { return node_ && node_->is_leaf(); }

bool Tensor::has_grad() const { return node_ && node_->has_grad; }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw UsageError("tensor has no gradient");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!node_) throw UsageError("use of an undefined tensor");
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_ && node_->has_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor make_op_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                      const char* op, std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->op = op;
  const bool needs = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) {
                       return t.requires_grad();
                     });
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

// ---- ops -----------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " · " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  gemm_acc(m, k, n, a.values().data(), b.values().data(), out.data());
  return make_op_result({m, n}, std::move(out), {a, b}, "matmul", [m, k, n](detail::Node& self) {
    auto& na = input(self, 0);
    auto& nb = input(self, 1);
    if (wants_grad(na)) {
      na.ensure_grad();
      const auto bt = transpose(nb.value, k, n);
      gemm_acc(m, n, k, self.grad.data(), bt.data(), na.grad.data());
    }
    if (wants_grad(nb)) {
      nb.ensure_grad();
      gemm_at_acc(m, k, n, na.value.data(), self.grad.data(), nb.grad.data());
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, "add", [](detail::Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      auto& in = input(self, k);
      if (!wants_grad(in)) continue;
      in.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, "sub", [](detail::Node& self) {
    auto& na = input(self, 0);
    auto& nb = input(self, 1);
    if (wants_grad(na)) {
      na.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) na.grad[i] += self.grad[i];
    }
    if (wants_grad(nb)) {
      nb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) nb.grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, "mul", [](detail::Node& self) {
    auto& na = input(self, 0);
    auto& nb = input(self, 1);
    if (wants_grad(na)) {
      na.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) na.grad[i] += self.grad[i] * nb.value[i];
    }
    if (wants_grad(nb)) {
      nb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) nb.grad[i] += self.grad[i] * na.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary_elementwise(
      a, "scale", [factor](double v) { return v * factor; },
      [factor](detail::Node& self) {
        auto& in = input(self, 0);
        in.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += factor * self.grad[i];
      });
}

Tensor shift(const Tensor& a, double offset) {
  return unary_elementwise(
      a, "shift", [offset](double v) { return v + offset; },
      [](detail::Node& self) {
        auto& in = input(self, 0);
        in.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i];
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary_elementwise(
      x, "sigmoid", [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](detail::Node& self) {
        auto& in = input(self, 0);
        in.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const double s = self.value[i];
          in.grad[i] += self.grad[i] * s * (1.0 - s);
        }
      });
}

Tensor tanh(const Tensor& x) {
  return unary_elementwise(
      x, "tanh", [](double v) { return std::tanh(v); },
      [](detail::Node& self) {
        auto& in = input(self, 0);
        in.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const double t = self.value[i];
          in.grad[i] += self.grad[i] * (1.0 - t * t);
        }
      });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  require_rank2(a, "add_bias");
  const std::size_t m = a.rows(), n = a.cols();
  if (bias.size() != n) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " does not match " +
                         shape_string(a.shape()));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto bv = bias.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  return make_op_result({m, n}, std::move(out), {a, bias}, "add_bias", [m, n](detail::Node& self) {
    auto& na = input(self, 0);
    auto& nb = input(self, 1);
    if (wants_grad(na)) {
      na.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) na.grad[i] += self.grad[i];
    }
    if (wants_grad(nb)) {
      nb.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) nb.grad[j] += self.grad[i * n + j];
    }
  });
}

namespace {

void require_column_of(const Tensor& a, const Tensor& c, const char* op) {
  require_rank2(a, op);
  if (c.rank() != 2 || c.rows() != a.rows() || c.cols() != 1) {
    throw DimensionError(std::string(op) + ": expected [" + std::to_string(a.rows()) +
                         " x 1] column, got " + shape_string(c.shape()));
  }
}

}  // namespace

Tensor add_col(const Tensor& a, const Tensor& c) {
  require_column_of(a, c, "add_col");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto cv = c.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += cv[i];
  return make_op_result({m, n}, std::move(out), {a, c}, "add_col", [m, n](detail::Node& self) {
    auto& na = input(self, 0);
    auto& nc = input(self, 1);
    if (wants_grad(na)) {
      na.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) na.grad[i] += self.grad[i];
    }
    if (wants_grad(nc)) {
      nc.ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += self.grad[i * n + j];
        nc.grad[i] += acc;
      }
    }
  });
}

Tensor mul_col(const Tensor& a, const Tensor& c) {
  require_column_of(a, c, "mul_col");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto cv = c.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] *= cv[i];
  return make_op_result({m, n}, std::move(out), {a, c}, "mul_col", [m, n](detail::Node& self) {
    auto& na = input(self, 0);
    auto& nc = input(self, 1);
    if (wants_grad(na)) {
      na.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) na.grad[i * n + j] += self.grad[i * n + j] * nc.value[i];
    }
    if (wants_grad(nc)) {
      nc.ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += self.grad[i * n + j] * na.value[i * n + j];
        nc.grad[i] += acc;
      }
    }
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_cols");
  const std::size_t m = a.rows(), n = a.cols();
  if (begin > end || end > n) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") outside " + shape_string(a.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<double> out(m * w);
  const auto av = a.values();
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(i * n + begin), w, out.begin() + static_cast<std::ptrdiff_t>(i * w));
  return make_op_result({m, w}, std::move(out), {a}, "slice_cols",
                        [m, n, w, begin](detail::Node& self) {
                          auto& in = input(self, 0);
                          in.ensure_grad();
                          for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < w; ++j)
                              in.grad[i * n + begin + j] += self.grad[i * w + j];
                        });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_rows");
  const std::size_t m = a.rows(), n = a.cols();
  if (begin > end || end > m) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") outside " + shape_string(a.shape()));
  }
  const auto av = a.values();
  std::vector<double> out(av.begin() + static_cast<std::ptrdiff_t>(begin * n),
                          av.begin() + static_cast<std::ptrdiff_t>(end * n));
  return make_op_result({end - begin, n}, std::move(out), {a}, "slice_rows",
                        [begin, n](detail::Node& self) {
                          auto& in = input(self, 0);
                          in.ensure_grad();
                          const std::size_t offset = begin * n;
                          for (std::size_t i = 0; i < self.grad.size(); ++i)
                            in.grad[offset + i] += self.grad[i];
                        });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw UsageError("concat_rows: no inputs");
  require_rank2(parts.front(), "concat_rows");
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.cols() != n) {
      throw DimensionError("concat_rows: column mismatch " + shape_string(parts.front().shape()) +
                           " vs " + shape_string(p.shape()));
    }
    m += p.rows();
  }
  std::vector<double> out;
  out.reserve(m * n);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return make_op_result({m, n}, std::move(out), parts, "concat_rows", [](detail::Node& self) {
    std::size_t offset = 0;
    for (auto& in : self.inputs) {
      const std::size_t len = in->value.size();
      if (in->requires_grad) {
        in->ensure_grad();
        for (std::size_t i = 0; i < len; ++i) in->grad[i] += self.grad[offset + i];
      }
      offset += len;
    }
  });
}

Tensor cumsum_cols(const Tensor& a) {
  require_rank2(a, "cumsum_cols");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 1; j < n; ++j) out[i * n + j] += out[i * n + j - 1];
  return make_op_result({m, n}, std::move(out), {a}, "cumsum_cols", [m, n](detail::Node& self) {
    auto& in = input(self, 0);
    in.ensure_grad();
    // d out[j] / d a[i] = 1 for i <= j, so the input gradient is a reverse running sum.
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t j = n; j-- > 0;) {
        acc += self.grad[i * n + j];
        in.grad[i * n + j] += acc;
      }
    }
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return make_op_result({1}, {total}, {a}, "sum", [](detail::Node& self) {
    auto& in = input(self, 0);
    in.ensure_grad();
    const double g = self.grad[0];
    for (auto& v : in.grad) v += g;
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw UsageError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor huber_loss(const Tensor& pred, const Tensor& target, double delta) {
  if (!(delta > 0.0)) {
    throw ConfigError("huber_loss: delta must be positive, got " + std::to_string(delta));
  }
  require_same_shape(pred, target, "huber_loss");
  const std::size_t n = pred.size();
  if (n == 0) throw UsageError("huber_loss on empty tensors");
  const auto pv = pred.values(), tv = target.values();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = pv[i] - tv[i];
    const double ae = std::abs(e);
    total += ae <= delta ? 0.5 * e * e : delta * (ae - 0.5 * delta);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return make_op_result({1}, {total * inv_n}, {pred, target}, "huber_loss",
                        [delta, inv_n](detail::Node& self) {
                          auto& np = input(self, 0);
                          auto& nt = input(self, 1);
                          const double g = self.grad[0] * inv_n;
                          const std::size_t count = np.value.size();
                          if (wants_grad(np)) np.ensure_grad();
                          if (wants_grad(nt)) nt.ensure_grad();
                          for (std::size_t i = 0; i < count; ++i) {
                            const double e = np.value[i] - nt.value[i];
                            const double d = g * std::clamp(e, -delta, delta);
                            if (np.requires_grad) np.grad[i] += d;
                            if (nt.requires_grad) nt.grad[i] -= d;
                          }
                        });
}

Tensor bce_loss(const Tensor& prob, const Tensor& label) {
  require_same_shape(prob, label, "bce_loss");
  const std::size_t n = prob.size();
  if (n == 0) throw UsageError("bce_loss on empty tensors");
  const auto pv = prob.values(), yv = label.values();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(pv[i], kProbClamp, 1.0 - kProbClamp);
    total -= yv[i] * std::log(p) + (1.0 - yv[i]) * std::log(1.0 - p);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return make_op_result({1}, {total * inv_n}, {prob, label}, "bce_loss",
                        [inv_n](detail::Node& self) {
                          auto& np = input(self, 0);
                          auto& ny = input(self, 1);
                          const double g = self.grad[0] * inv_n;
                          const std::size_t count = np.value.size();
                          if (wants_grad(np)) {
                            np.ensure_grad();
                            for (std::size_t i = 0; i < count; ++i) {
                              const double p = std::clamp(np.value[i], kProbClamp, 1.0 - kProbClamp);
                              const double y = ny.value[i];
                              np.grad[i] += g * (-y / p + (1.0 - y) / (1.0 - p));
                            }
                          }
                          if (wants_grad(ny)) {
                            ny.ensure_grad();
                            for (std::size_t i = 0; i < count; ++i) {
                              const double p = std::clamp(np.value[i], kProbClamp, 1.0 - kProbClamp);
                              ny.grad[i] -= g * (std::log(p) - std::log(1.0 - p));
                            }
                          }
                        });
}

Tensor grad_reverse(const Tensor& x, double lambda) {
  if (lambda < 0.0) {
    throw ConfigError("grad_reverse: lambda must be non-negative, got " + std::to_string(lambda));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_op_result(x.shape(), std::move(out), {x}, "grad_reverse",
                        [neg = -lambda](detail::Node& self) {
                          auto& in = input(self, 0);
                          in.ensure_grad();
                          for (std::size_t i = 0; i < self.grad.size(); ++i)
                            in.grad[i] += neg * self.grad[i];
                        });
}

// ---- backward ----------------------------------------------------------------

Tape Tape::record(const Tensor& root) {
  Tape tape;
  if (!root.defined()) return tape;
  std::unordered_map<const detail::Node*, std::size_t> position;
  struct Frame {
    detail::Node* node;
    std::size_t next_input;
  };
  std::vector<Frame> stack{{root.node().get(), 0}};
  std::unordered_map<const detail::Node*, bool> on_stack{{root.node().get(), true}};
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.next_input < top.node->inputs.size()) {
      detail::Node* child = top.node->inputs[top.next_input++].get();
      if (!position.count(child) && !on_stack[child]) {
        on_stack[child] = true;
        stack.push_back({child, 0});
      }
      continue;
    }
    Entry entry{top.node, top.node->op, {}};
    entry.inputs.reserve(top.node->inputs.size());
    for (const auto& in : top.node->inputs) entry.inputs.push_back(position.at(in.get()));
    position[top.node] = tape.entries_.size();
    tape.entries_.push_back(std::move(entry));
    stack.pop_back();
  }
  return tape;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw UsageError("backward: loss must be a scalar, got " +
                     (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) {
    throw UsageError("backward: loss is not connected to any tensor requiring gradients");
  }
  const Tape tape = Tape::record(loss);
  for (const auto& e : tape.entries()) {
    if (!e.node->is_leaf()) {
      e.node->ensure_grad();
      std::fill(e.node->grad.begin(), e.node->grad.end(), 0.0);
    }
  }
  auto& root = *loss.node();
  root.ensure_grad();
  root.grad[0] += 1.0;
  const auto& entries = tape.entries();
  for (std::size_t i = entries.size(); i-- > 0;) {
    detail::Node& n = *entries[i].node;
    if (!n.is_leaf() && n.requires_grad && n.backward) n.backward(n);
  }
}

}  // namespace thermocast::ndgrad
