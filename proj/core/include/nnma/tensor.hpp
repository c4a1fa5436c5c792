#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nnma {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(Shape s);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty unless requires_grad
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this->grad and accumulates into the grads of `inputs`.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return !backward; }
};

}  // namespace detail

// Dense row-major matrix of doubles. Column vectors are (n x 1) matrices.
//
// A Tensor is a cheap handle: copies share the same node. Operations on
// tensors that require gradients record their inputs and a backward closure,
// which Tape replays in reverse. Leaf gradients accumulate across backward
// calls until zero_grad() is called.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  Shape shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  // Direct write access; only meaningful on leaves (parameters, inputs).
  std::span<double> mutable_values() { return node_->value; }
  double operator()(std::size_t r, std::size_t c) const {
    return node_->value[r * node_->shape.cols + c];
  }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void zero_grad();

  // Reverse sweep from a 1x1 tensor.
  void backward() const;

  // Same values, no history, requires_grad = false.
  Tensor detach() const;
  // Deep copy of values into a fresh leaf with the same requires_grad flag.
  Tensor clone() const;

  const char* op_name() const { return node_->op; }
  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Topologically ordered record of the operations reachable from a root.
// Inputs always precede the operations that consume them; backward() walks
// the record once in reverse.
class Tape {
 public:
  explicit Tape(const Tensor& root);

  std::size_t size() const { return ops_.size(); }
  std::vector<const char*> op_names() const;
  void backward();

 private:
  std::shared_ptr<detail::Node> root_;
  std::vector<detail::Node*> ops_;
};

// ---- operations ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);

// Stacks parts vertically; all parts must share a column count.
Tensor concat(std::span<const Tensor> parts);
Tensor concat(std::initializer_list<Tensor> parts);

// Stacks parts horizontally; all parts must share a row count.
Tensor concat_cols(std::span<const Tensor> parts);

enum class UnaryFn { tanh, sigmoid };
Tensor map_unary(const Tensor& x, UnaryFn fn);
inline Tensor tanh(const Tensor& x) { return map_unary(x, UnaryFn::tanh); }
inline Tensor sigmoid(const Tensor& x) { return map_unary(x, UnaryFn::sigmoid); }

enum class BinaryFn { add, sub, hadamard };
Tensor zip_binary(const Tensor& x, const Tensor& y, BinaryFn fn);
inline Tensor add(const Tensor& x, const Tensor& y) { return zip_binary(x, y, BinaryFn::add); }
inline Tensor sub(const Tensor& x, const Tensor& y) { return zip_binary(x, y, BinaryFn::sub); }
inline Tensor hadamard(const Tensor& x, const Tensor& y) {
  return zip_binary(x, y, BinaryFn::hadamard);
}

// Column-vector softmax with max subtraction.
Tensor softmax(const Tensor& x);

// (r x c) -> (r x 1) arithmetic mean across columns.
Tensor mean_cols(const Tensor& m);

// (d x 1) -> (d x l), l identical columns.
Tensor broadcast_repeat(const Tensor& v, std::size_t l);

// Selects columns of `table` in order; repeated indices accumulate gradient.
Tensor gather_cols(const Tensor& table, std::span<const std::size_t> indices);

// Column j as an (r x 1) vector.
Tensor column(const Tensor& m, std::size_t j);

Tensor transpose(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor scale(const Tensor& x, double factor);

// weight * -log softmax(logits)[gold], evaluated with log-sum-exp.
Tensor softmax_cross_entropy(const Tensor& logits, std::size_t gold, double weight = 1.0);

namespace debug {
// Perturbs the sigmoid backward rule by a few percent. Used as a negative
// control for the gradient checker; never enable outside of tests.
void set_sigmoid_gradient_fault(bool enabled);
bool sigmoid_gradient_fault();
}  // namespace debug

}  // namespace nnma
