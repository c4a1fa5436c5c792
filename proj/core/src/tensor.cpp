#include "nnma/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace nnma {

std::string to_string(Shape s) {
  return "(" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + ")";
}

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

std::atomic<bool> g_sigmoid_fault{false};

NodePtr make_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  if (requires_grad) n->grad.assign(n->value.size(), 0.0);
  return n;
}

// Builds an op node. When no input requires a gradient the node is a plain
// constant and neither inputs nor the closure are retained.
Tensor make_op(const char* op, Shape shape, std::vector<double> values,
               std::vector<NodePtr> inputs, std::function<void(Node&)> backward) {
  bool needs_grad = std::any_of(inputs.begin(), inputs.end(),
                                [](const NodePtr& p) { return p->requires_grad; });
  auto n = make_leaf(shape, std::move(values), needs_grad);
  n->op = op;
  if (needs_grad) {
    n->inputs = std::move(inputs);
    n->backward = std::move(backward);
  }
  return Tensor(std::move(n));
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw std::invalid_argument(std::string(op) + ": undefined tensor");
}

[[noreturn]] void shape_error(const char* op, Shape a, Shape b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a) + " vs " +
                   to_string(b));
}

}  // namespace

// ---- Tensor --------------------------------------------------------------

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return Tensor(make_leaf({rows, cols}, std::vector<double>(rows * cols, 0.0), requires_grad));
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values,
                    bool requires_grad) {
  if (values.size() != rows * cols) {
    throw ShapeError("Tensor::from: " + std::to_string(values.size()) +
                     " values do not fill shape " + to_string({rows, cols}));
  }
  return Tensor(make_leaf({rows, cols}, std::move(values), requires_grad));
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  std::size_t n = values.size();
  return from(n, 1, std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from(1, 1, {value}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor is " + to_string(shape()) + ", not 1x1");
  return node_->value[0];
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
  Tape tape(*this);
  tape.backward();
}

Tensor Tensor::detach() const {
  return Tensor(make_leaf(node_->shape, node_->value, false));
}

Tensor Tensor::clone() const {
  return Tensor(make_leaf(node_->shape, node_->value, node_->requires_grad));
}

// ---- Tape ----------------------------------------------------------------

Tape::Tape(const Tensor& root) : root_(root.node()) {
  require_defined(root, "Tape");
  if (root_->value.size() != 1) {
    throw ShapeError("backward: root must be 1x1, got " + to_string(root_->shape));
  }
  if (!root_->requires_grad) return;

  // Iterative post-order DFS: a node is emitted after all of its inputs.
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root_.get(), 0);
  visited.insert(root_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* in = node->inputs[next++].get();
      if (in->requires_grad && !in->is_leaf() && visited.insert(in).second) {
        stack.emplace_back(in, 0);
      }
      continue;
    }
    if (!node->is_leaf()) ops_.push_back(node);
    stack.pop_back();
  }
}

std::vector<const char*> Tape::op_names() const {
  std::vector<const char*> names;
  names.reserve(ops_.size());
  for (const Node* n : ops_) names.push_back(n->op);
  return names;
}

void Tape::backward() {
  if (!root_->requires_grad) return;
  // Intermediate gradients are scratch space for this sweep; only leaves
  // accumulate across sweeps.
  for (Node* n : ops_) std::fill(n->grad.begin(), n->grad.end(), 0.0);
  root_->grad[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)->backward(**it);
}

// ---- operations -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) shape_error("matmul", a.shape(), b.shape());

  std::vector<double> out(m * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  return make_op("matmul", {m, n}, std::move(out), {a.node(), b.node()},
                 [m, k, n](Node& self) {
                   Node& A = *self.inputs[0];
                   Node& B = *self.inputs[1];
                   const double* g = self.grad.data();
                   if (A.requires_grad) {  // dA = g * B^T
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t p = 0; p < k; ++p) {
                         double acc = 0.0;
                         for (std::size_t j = 0; j < n; ++j)
                           acc += g[i * n + j] * B.value[p * n + j];
                         A.grad[i * k + p] += acc;
                       }
                   }
                   if (B.requires_grad) {  // dB = A^T * g
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t p = 0; p < k; ++p) {
                         const double aip = A.value[i * k + p];
                         double* brow = B.grad.data() + p * n;
                         for (std::size_t j = 0; j < n; ++j) brow[j] += aip * g[i * n + j];
                       }
                   }
                 });
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: empty part list");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  std::vector<NodePtr> inputs;
  for (const auto& p : parts) {
    require_defined(p, "concat");
    if (p.cols() != cols) shape_error("concat", parts[0].shape(), p.shape());
    rows += p.rows();
    inputs.push_back(p.node());
  }
  if (parts.size() == 1) return parts[0];

  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return make_op("concat", {rows, cols}, std::move(out), std::move(inputs), [](Node& self) {
    std::size_t offset = 0;
    for (auto& in : self.inputs) {
      const std::size_t n = in->value.size();
      if (in->requires_grad)
        for (std::size_t i = 0; i < n; ++i) in->grad[i] += self.grad[offset + i];
      offset += n;
    }
  });
}

Tensor concat(std::initializer_list<Tensor> parts) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty part list");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  std::vector<NodePtr> inputs;
  for (const auto& p : parts) {
    require_defined(p, "concat_cols");
    if (p.rows() != rows) shape_error("concat_cols", parts[0].shape(), p.shape());
    cols += p.cols();
    inputs.push_back(p.node());
  }
  if (parts.size() == 1) return parts[0];

  std::vector<double> out(rows * cols);
  std::size_t col0 = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < p.cols(); ++c) out[r * cols + col0 + c] = p(r, c);
    col0 += p.cols();
  }
  return make_op("concat_cols", {rows, cols}, std::move(out), std::move(inputs),
                 [rows, cols](Node& self) {
                   std::size_t col0 = 0;
                   for (auto& in : self.inputs) {
                     const std::size_t pc = in->shape.cols;
                     if (in->requires_grad)
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < pc; ++c)
                           in->grad[r * pc + c] += self.grad[r * cols + col0 + c];
                     col0 += pc;
                   }
                 });
}

Tensor map_unary(const Tensor& x, UnaryFn fn) {
  require_defined(x, "map_unary");
  std::vector<double> out(x.size());
  auto xv = x.values();
  if (fn == UnaryFn::tanh) {
    std::transform(xv.begin(), xv.end(), out.begin(), [](double v) { return std::tanh(v); });
    return make_op("tanh", x.shape(), std::move(out), {x.node()}, [](Node& self) {
      Node& in = *self.inputs[0];
      for (std::size_t i = 0; i < self.value.size(); ++i) {
        const double t = self.value[i];
        in.grad[i] += self.grad[i] * (1.0 - t * t);
      }
    });
  }
  std::transform(xv.begin(), xv.end(), out.begin(),
                 [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return make_op("sigmoid", x.shape(), std::move(out), {x.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    const double fault = g_sigmoid_fault.load(std::memory_order_relaxed) ? 1.05 : 1.0;
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      const double s = self.value[i];
      in.grad[i] += self.grad[i] * s * (1.0 - s) * fault;
    }
  });
}

Tensor zip_binary(const Tensor& x, const Tensor& y, BinaryFn fn) {
  require_defined(x, "zip_binary");
  require_defined(y, "zip_binary");
  if (x.shape() != y.shape()) shape_error("zip_binary", x.shape(), y.shape());
  const std::size_t n = x.size();
  std::vector<double> out(n);
  auto xv = x.values();
  auto yv = y.values();
  switch (fn) {
    case BinaryFn::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = xv[i] + yv[i];
      return make_op("add", x.shape(), std::move(out), {x.node(), y.node()}, [](Node& self) {
        for (auto& in : self.inputs)
          if (in->requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
      });
    case BinaryFn::sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = xv[i] - yv[i];
      return make_op("sub", x.shape(), std::move(out), {x.node(), y.node()}, [](Node& self) {
        Node& a = *self.inputs[0];
        Node& b = *self.inputs[1];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          if (a.requires_grad) a.grad[i] += self.grad[i];
          if (b.requires_grad) b.grad[i] -= self.grad[i];
        }
      });
    case BinaryFn::hadamard:
      for (std::size_t i = 0; i < n; ++i) out[i] = xv[i] * yv[i];
      return make_op("hadamard", x.shape(), std::move(out), {x.node(), y.node()},
                     [](Node& self) {
                       Node& a = *self.inputs[0];
                       Node& b = *self.inputs[1];
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                         if (a.requires_grad) a.grad[i] += self.grad[i] * b.value[i];
                         if (b.requires_grad) b.grad[i] += self.grad[i] * a.value[i];
                       }
                     });
  }
  throw std::invalid_argument("zip_binary: unknown function");
}

Tensor softmax(const Tensor& x) {
  require_defined(x, "softmax");
  if (x.cols() != 1 || x.rows() == 0) {
    throw ShapeError("softmax: expected a non-empty column vector, got " + to_string(x.shape()));
  }
  auto xv = x.values();
  const double mx = *std::max_element(xv.begin(), xv.end());
  std::vector<double> out(xv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    out[i] = std::exp(xv[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return make_op("softmax", x.shape(), std::move(out), {x.node()}, [](Node& self) {
    // dx_i = s_i * (g_i - sum_j g_j s_j)
    Node& in = *self.inputs[0];
    double dot = 0.0;
    for (std::size_t i = 0; i < self.value.size(); ++i) dot += self.grad[i] * self.value[i];
    for (std::size_t i = 0; i < self.value.size(); ++i)
      in.grad[i] += self.value[i] * (self.grad[i] - dot);
  });
}

Tensor mean_cols(const Tensor& m) {
  require_defined(m, "mean_cols");
  const std::size_t r = m.rows(), c = m.cols();
  if (c == 0) throw ShapeError("mean_cols: matrix has no columns");
  // Accumulates m(i, j) * (1/c) left to right, the same evaluation order
  // as matmul(m, w) with w_j = 1/c, so uniform attention reproduces the
  // mean bit for bit.
  const double w = 1.0 / static_cast<double>(c);
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i] += m(i, j) * w;
  return make_op("mean_cols", {r, 1}, std::move(out), {m.node()}, [r, c, w](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t i = 0; i < r; ++i) {
      const double g = self.grad[i] * w;
      for (std::size_t j = 0; j < c; ++j) in.grad[i * c + j] += g;
    }
  });
}

Tensor broadcast_repeat(const Tensor& v, std::size_t l) {
  require_defined(v, "broadcast_repeat");
  if (v.cols() != 1) throw ShapeError("broadcast_repeat: expected a column vector, got " +
                                      to_string(v.shape()));
  if (l == 0) throw ShapeError("broadcast_repeat: repeat count must be >= 1");
  const std::size_t d = v.rows();
  std::vector<double> out(d * l);
  for (std::size_t i = 0; i < d; ++i) std::fill_n(out.begin() + i * l, l, v[i]);
  return make_op("broadcast_repeat", {d, l}, std::move(out), {v.node()}, [d, l](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < l; ++j) acc += self.grad[i * l + j];
      in.grad[i] += acc;
    }
  });
}

Tensor gather_cols(const Tensor& table, std::span<const std::size_t> indices) {
  require_defined(table, "gather_cols");
  if (indices.empty()) throw ShapeError("gather_cols: empty index list");
  const std::size_t rows = table.rows(), tc = table.cols(), n = indices.size();
  for (std::size_t idx : indices)
    if (idx >= tc)
      throw std::out_of_range("gather_cols: column " + std::to_string(idx) +
                              " out of range for " + to_string(table.shape()));
  std::vector<double> out(rows * n);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = table(r, indices[j]);
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make_op("gather_cols", {rows, n}, std::move(out), {table.node()},
                 [rows, tc, n, idx = std::move(idx)](Node& self) {
                   Node& in = *self.inputs[0];
                   for (std::size_t r = 0; r < rows; ++r)
                     for (std::size_t j = 0; j < n; ++j)
                       in.grad[r * tc + idx[j]] += self.grad[r * n + j];
                 });
}

Tensor column(const Tensor& m, std::size_t j) {
  require_defined(m, "column");
  if (j >= m.cols())
    throw std::out_of_range("column: index " + std::to_string(j) + " out of range for " +
                            to_string(m.shape()));
  const std::size_t r = m.rows(), c = m.cols();
  std::vector<double> out(r);
  for (std::size_t i = 0; i < r; ++i) out[i] = m(i, j);
  return make_op("column", {r, 1}, std::move(out), {m.node()}, [r, c, j](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t i = 0; i < r; ++i) in.grad[i * c + j] += self.grad[i];
  });
}

Tensor transpose(const Tensor& x) {
  require_defined(x, "transpose");
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x(i, j);
  return make_op("transpose", {c, r}, std::move(out), {x.node()}, [r, c](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) in.grad[i * c + j] += self.grad[j * r + i];
  });
}

Tensor sum(const Tensor& x) {
  require_defined(x, "sum");
  auto xv = x.values();
  double total = std::accumulate(xv.begin(), xv.end(), 0.0);
  return make_op("sum", {1, 1}, {total}, {x.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    for (double& g : in.grad) g += self.grad[0];
  });
}

Tensor scale(const Tensor& x, double factor) {
  require_defined(x, "scale");
  std::vector<double> out(x.values().begin(), x.values().end());
  for (double& v : out) v *= factor;
  return make_op("scale", x.shape(), std::move(out), {x.node()}, [factor](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i] * factor;
  });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::size_t gold, double weight) {
  require_defined(logits, "softmax_cross_entropy");
  if (logits.cols() != 1 || logits.rows() == 0)
    throw ShapeError("softmax_cross_entropy: expected a column vector, got " +
                     to_string(logits.shape()));
  if (gold >= logits.rows())
    throw std::out_of_range("softmax_cross_entropy: gold label " + std::to_string(gold) +
                            " out of range for " + std::to_string(logits.rows()) + " classes");
  auto z = logits.values();
  const double mx = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - mx);
  const double log_z = mx + std::log(total);
  const double loss = weight * (log_z - z[gold]);
  return make_op("softmax_cross_entropy", {1, 1}, {loss}, {logits.node()},
                 [gold, weight, log_z](Node& self) {
                   Node& in = *self.inputs[0];
                   const double g = self.grad[0] * weight;
                   for (std::size_t i = 0; i < in.value.size(); ++i) {
                     const double p = std::exp(in.value[i] - log_z);
                     in.grad[i] += g * (p - (i == gold ? 1.0 : 0.0));
                   }
                 });
}

namespace debug {
void set_sigmoid_gradient_fault(bool enabled) { g_sigmoid_fault.store(enabled); }
bool sigmoid_gradient_fault() { return g_sigmoid_fault.load(); }
}  // namespace debug

}  // namespace nnma
