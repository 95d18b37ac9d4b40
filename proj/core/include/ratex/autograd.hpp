#pragma once

// Reverse-mode automatic differentiation over dense tensors.
//
// A Var is a cheap handle to a node of a dynamically built computation graph.
// Every operation below returns a new node whose backward rule accumulates into
// its parents' gradients. Gradients accumulate across backward() calls until
// zero_grad() is called explicitly.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ratex/tensor.hpp"

namespace ratex {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;  // sized lazily, always matches value.shape() once touched
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Tensor& grad_buffer();
};

}  // namespace detail

class Var {
 public:
  Var() = default;

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  /// Direct access for optimizers and finite-difference probes.
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad_buffer(); }
  Tensor& mutable_grad() { return node_->grad_buffer(); }
  void zero_grad();

  const Shape& shape() const { return node_->value.shape(); }
  double item() const { return node_->value.item(); }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  std::size_t parent_count() const noexcept { return node_ ? node_->parents.size() : 0; }

  detail::Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared_node() const noexcept { return node_; }

  static Var from_node(std::shared_ptr<detail::Node> node) {
    Var v;
    v.node_ = std::move(node);
    return v;
  }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Trainable leaf.
Var leaf(Tensor value, bool requires_grad = true);
/// Leaf that never receives gradient.
Var constant(Tensor value);

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

/// Builds a result node. `backward` is dropped when no parent requires grad or
/// recording is disabled. Exposed so that fused operations in other modules
/// can join the graph.
Var make_result(Tensor value, std::vector<Var> parents, std::function<void(detail::Node&)> backward);

/// Fills d(loss)/d(node) into every reachable node's gradient. `loss` must hold
/// exactly one element. Calling twice without zeroing accumulates.
void backward(const Var& loss);

// ---- elementwise and linear algebra ----

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
/// x [n x m] plus bias [m] on every row (or x [m] plus bias [m]).
Var add_bias(const Var& x, const Var& bias);
Var scale(const Var& x, double factor);
Var shift(const Var& x, double offset);
Var square(const Var& x);
/// x divided by a one-element node.
Var divide(const Var& x, const Var& denominator);

struct Activation {
  enum class Kind { tanh, sigmoid, power, gelu };
  Kind kind = Kind::tanh;
  double beta = 1.0;  // exponent, power only

  static Activation tanh() { return {Kind::tanh, 1.0}; }
  static Activation sigmoid() { return {Kind::sigmoid, 1.0}; }
  static Activation power(double beta) { return {Kind::power, beta}; }
  static Activation gelu() { return {Kind::gelu, 1.0}; }
};

/// Elementwise activation. power(beta) requires beta > 0 and non-negative input.
Var map_activation(const Var& x, Activation kind);
inline Var tanh(const Var& x) { return map_activation(x, Activation::tanh()); }
inline Var sigmoid(const Var& x) { return map_activation(x, Activation::sigmoid()); }
inline Var power(const Var& x, double beta) { return map_activation(x, Activation::power(beta)); }
inline Var gelu(const Var& x) { return map_activation(x, Activation::gelu()); }

enum class ReduceKind { sum, mean, min, max };

/// Reduction along `axis`. min/max route gradient to the first extremal element.
Var reduce(const Var& x, ReduceKind kind, std::size_t axis = 0);
/// Reduction over every element to a rank-0 result.
Var reduce_all(const Var& x, ReduceKind kind);

// ---- shape manipulation ----

Var reshape(const Var& x, Shape shape);
Var transpose(const Var& x);
Var slice_rows(const Var& x, std::size_t begin, std::size_t end);
Var slice_cols(const Var& x, std::size_t begin, std::size_t end);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
/// Elements of a rank-1 tensor at `indices`.
Var gather(const Var& x, std::span<const std::size_t> indices);
/// Rows of `table` at `ids`; backward scatter-adds into the table.
Var gather_rows(const Var& table, std::span<const std::size_t> ids);

// ---- normalisation ----

/// Row-wise softmax. When `allowed` is non-empty it is a row-major 0/1 mask of
/// x's shape; masked entries act as -inf and receive probability zero.
Var softmax_rows(const Var& x, std::span<const std::uint8_t> allowed = {});
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);

// ---- work accounting ----

namespace flops {
/// Multiply-add count recorded by matmul and attention kernels on this thread.
std::uint64_t count() noexcept;
void reset() noexcept;
void add(std::uint64_t n) noexcept;
}  // namespace flops

}  // namespace ratex
