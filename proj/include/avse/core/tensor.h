// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Dense row-major tensors with a dynamically recorded reverse-mode graph.
//
// A Tensor is a cheap handle onto a shared Node. Operations that consume at
// least one grad-tracked input record their parents and a backward closure
// on the result node; leaves created with Tensor::parameter() accumulate
// gradients across backward() calls until zero_grad() is called.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace avse::core {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape &shape);
std::string shape_str(const Shape &shape);

template <typename Real>
struct Node {
  Shape shape;
  std::vector<Real> value;
  // Empty until something flows into it; same length as value afterwards.
  std::vector<Real> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  const char *op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node &)> backward;

  std::vector<Real> &grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), Real(0));
    return grad;
  }
};

// Graph recording is on by default; NoGradGuard disables it for the current
// thread, e.g. for inference over a trained model.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool previous_;
};

template <typename Real>
class Tensor {
 public:
  using NodeT = Node<Real>;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<NodeT> node) : node_(std::move(node)) {}

  static Tensor zeros(const Shape &shape);
  static Tensor full(const Shape &shape, Real value);
  static Tensor from(const Shape &shape, std::vector<Real> values);
  static Tensor scalar(Real value);
  // A leaf that tracks gradients.
  static Tensor parameter(const Shape &shape, std::vector<Real> values);

  bool defined() const { return node_ != nullptr; }
  const Shape &shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const Real> data() const { return node_->value; }
  // Writes bypass the graph; only use on leaves or before recording.
  std::span<Real> mutable_data() { return node_->value; }
  std::span<const Real> grad() const { return node_->grad; }
  std::span<Real> mutable_grad() { return node_->grad_buffer(); }
  bool has_grad() const { return !node_->grad.empty(); }

  Real item() const;
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  void zero_grad();
  // Seeds d(this)/d(this) = 1 and propagates to every reachable leaf.
  // Requires a single-element, grad-tracked tensor.
  void backward() const;

  // Same values, no history.
  Tensor detach() const;

  const std::shared_ptr<NodeT> &node() const { return node_; }

 private:
  std::shared_ptr<NodeT> node_;
};

// Builds a result node. The backward closure is attached only when grad
// mode is on and some input tracks gradients; otherwise the result is a
// plain constant and `backward` is dropped.
template <typename Real>
Tensor<Real> make_result(const char *op, Shape shape, std::vector<Real> value,
                         std::initializer_list<Tensor<Real>> inputs,
                         std::function<void(Node<Real> &)> backward);

template <typename Real>
Tensor<Real> make_result(const char *op, Shape shape, std::vector<Real> value,
                         const std::vector<Tensor<Real>> &inputs,
                         std::function<void(Node<Real> &)> backward);

// Gradient buffer of parent `index`, materialized on demand, or nullptr when
// that parent does not track gradients.
template <typename Real>
std::vector<Real> *parent_grad(Node<Real> &node, std::size_t index);

}  // namespace avse::core
