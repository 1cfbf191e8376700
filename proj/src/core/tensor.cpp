// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/core/tensor.h"

#include <sstream>
#include <unordered_set>

#include "avse/error.h"

namespace avse::core {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

std::size_t numel(const Shape &shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

template <typename Real>
std::shared_ptr<Node<Real>> new_leaf(const Shape &shape,
                                     std::vector<Real> values) {
  for (std::size_t d : shape) {
    if (d == 0) {
      fail(ErrorCode::kDimension,
           "tensor dimensions must be positive, got " + shape_str(shape));
    }
  }
  if (numel(shape) != values.size()) {
    fail(ErrorCode::kDimension, "shape " + shape_str(shape) + " needs " +
                                    std::to_string(numel(shape)) +
                                    " values, got " +
                                    std::to_string(values.size()));
  }
  auto node = std::make_shared<Node<Real>>();
  node->shape = shape;
  node->value = std::move(values);
  return node;
}

}  // namespace

template <typename Real>
Tensor<Real> Tensor<Real>::zeros(const Shape &shape) {
  return Tensor(new_leaf<Real>(shape, std::vector<Real>(numel(shape))));
}

template <typename Real>
Tensor<Real> Tensor<Real>::full(const Shape &shape, Real value) {
  return Tensor(new_leaf<Real>(shape, std::vector<Real>(numel(shape), value)));
}

template <typename Real>
Tensor<Real> Tensor<Real>::from(const Shape &shape, std::vector<Real> values) {
  return Tensor(new_leaf<Real>(shape, std::move(values)));
}

template <typename Real>
Tensor<Real> Tensor<Real>::scalar(Real value) {
  return Tensor(new_leaf<Real>({1}, {value}));
}

template <typename Real>
Tensor<Real> Tensor<Real>::parameter(const Shape &shape,
                                     std::vector<Real> values) {
  auto node = new_leaf<Real>(shape, std::move(values));
  node->requires_grad = true;
  return Tensor(std::move(node));
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (node_->value.size() != 1) {
    fail(ErrorCode::kContract,
         "item() on tensor of shape " + shape_str(node_->shape));
  }
  return node_->value[0];
}

template <typename Real>
void Tensor<Real>::zero_grad() {
  std::vector<Real>().swap(node_->grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::detach() const {
  return Tensor(new_leaf<Real>(node_->shape, node_->value));
}

template <typename Real>
void Tensor<Real>::backward() const {
  if (node_->value.size() != 1) {
    fail(ErrorCode::kContract, "backward() needs a scalar loss, got shape " +
                                   shape_str(node_->shape));
  }
  if (!node_->requires_grad) {
    fail(ErrorCode::kContract, "backward() on a tensor that tracks no graph");
  }

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node<Real> *> order;
  std::unordered_set<Node<Real> *> visited;
  std::vector<std::pair<Node<Real> *, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<Real> *parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Real> *node = *it;
    if (node->is_leaf) continue;
    if (!node->grad.empty() && node->backward) node->backward(*node);
    // Interior gradients are consumed once, so repeated backward() calls on
    // the same graph accumulate into leaves without double counting.
    std::vector<Real>().swap(node->grad);
  }
}

namespace {

template <typename Real, typename Range>
Tensor<Real> make_result_impl(const char *op, Shape shape,
                              std::vector<Real> value, const Range &inputs,
                              std::function<void(Node<Real> &)> backward) {
  auto node = std::make_shared<Node<Real>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool track = false;
  if (grad_enabled()) {
    for (const auto &t : inputs) track = track || t.requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    node->is_leaf = false;
    node->parents.reserve(inputs.size());
    for (const auto &t : inputs) node->parents.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor<Real>(std::move(node));
}

}  // namespace

template <typename Real>
Tensor<Real> make_result(const char *op, Shape shape, std::vector<Real> value,
                         std::initializer_list<Tensor<Real>> inputs,
                         std::function<void(Node<Real> &)> backward) {
  return make_result_impl<Real>(op, std::move(shape), std::move(value), inputs,
                                std::move(backward));
}

template <typename Real>
Tensor<Real> make_result(const char *op, Shape shape, std::vector<Real> value,
                         const std::vector<Tensor<Real>> &inputs,
                         std::function<void(Node<Real> &)> backward) {
  return make_result_impl<Real>(op, std::move(shape), std::move(value), inputs,
                                std::move(backward));
}

template <typename Real>
std::vector<Real> *parent_grad(Node<Real> &node, std::size_t index) {
  Node<Real> &parent = *node.parents[index];
  if (!parent.requires_grad) return nullptr;
  return &parent.grad_buffer();
}

#define AVSE_INSTANTIATE(Real)                                                \
  template class Tensor<Real>;                                                \
  template Tensor<Real> make_result<Real>(                                    \
      const char *, Shape, std::vector<Real>,                                 \
      std::initializer_list<Tensor<Real>>, std::function<void(Node<Real> &)>); \
  template Tensor<Real> make_result<Real>(                                    \
      const char *, Shape, std::vector<Real>, const std::vector<Tensor<Real>> &, \
      std::function<void(Node<Real> &)>);                                     \
  template std::vector<Real> *parent_grad<Real>(Node<Real> &, std::size_t);

AVSE_INSTANTIATE(float)
AVSE_INSTANTIATE(double)

}  // namespace avse::core
