#pragma once

// Reverse-mode differentiable dense tensors backed by Eigen.
//
// Every tensor is a 2-D row-major matrix; vectors are 1 x d rows. Ops build a
// graph of shared nodes when gradient recording is enabled and at least one
// input requires a gradient. Tensor::backward() walks that graph in reverse
// topological order.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "nnr/errors.hpp"

namespace nnr {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {
inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode_flag(); }

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
  ~NoGradGuard() { detail::grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename Scalar>
struct Node {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;

  Matrix<Scalar>& grad_buffer() {
    if (grad.size() == 0) grad = Matrix<Scalar>::Zero(value.rows(), value.cols());
    return grad;
  }

  template <typename Derived>
  void accumulate(const Eigen::MatrixBase<Derived>& g) {
    if (!requires_grad) return;
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
};

template <typename Scalar>
class Tensor {
 public:
  using NodeType = Node<Scalar>;
  using MatrixType = Matrix<Scalar>;

  Tensor() = default;

  explicit Tensor(MatrixType value, bool requires_grad = false)
      : node_(std::make_shared<NodeType>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Index rows, Index cols) { return Tensor(MatrixType::Zero(rows, cols)); }

  static Tensor row(std::initializer_list<Scalar> values) {
    MatrixType m(1, static_cast<Index>(values.size()));
    Index j = 0;
    for (Scalar v : values) m(0, j++) = v;
    return Tensor(std::move(m));
  }

  /// Result of an op. Records the graph edge only when some parent needs it.
  static Tensor from_op(MatrixType value, std::vector<Tensor> parents,
                        std::function<void(NodeType&)> backward_fn) {
    Tensor out(std::move(value));
    if (!grad_enabled()) return out;
    bool needed = false;
    for (const auto& p : parents) needed = needed || p.requires_grad();
    if (!needed) return out;
    out.node_->requires_grad = true;
    out.node_->parents.reserve(parents.size());
    for (auto& p : parents) out.node_->parents.push_back(p.node_);
    out.node_->backward_fn = std::move(backward_fn);
    return out;
  }

  bool defined() const { return static_cast<bool>(node_); }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Index size() const { return node_->value.size(); }
  std::vector<Index> shape() const { return {rows(), cols()}; }

  const MatrixType& value() const { return node_->value; }
  MatrixType& mutable_value() { return node_->value; }
  const MatrixType& grad() const { return node_->grad; }
  MatrixType& mutable_grad() { return node_->grad_buffer(); }
  bool has_grad() const { return node_->grad.size() != 0; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  void zero_grad() { node_->grad.resize(0, 0); }

  Scalar item() const {
    if (size() != 1) throw ShapeError("item() on a tensor with more than one element");
    return node_->value(0, 0);
  }

  NodeType* node() const { return node_.get(); }
  const std::shared_ptr<NodeType>& node_ptr() const { return node_; }

  /// Backpropagates from a scalar (1 x 1) tensor.
  void backward() const {
    if (size() != 1) throw ShapeError("backward() without a seed requires a 1x1 tensor");
    backward(MatrixType::Ones(1, 1));
  }

  void backward(const MatrixType& seed) const {
    if (seed.rows() != rows() || seed.cols() != cols()) throw ShapeError("backward seed shape mismatch");
    if (!requires_grad()) return;
    std::vector<NodeType*> order;
    topological_order(order);
    node_->accumulate(seed);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      NodeType* n = *it;
      if (n->backward_fn && n->grad.size() != 0) n->backward_fn(*n);
    }
  }

 private:
  void topological_order(std::vector<NodeType*>& order) const {
    std::unordered_set<NodeType*> visited;
    // Iterative post-order DFS; GRU chains can be long.
    std::vector<std::pair<NodeType*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->parents.size()) {
        NodeType* p = n->parents[next++].get();
        if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
  }

  std::shared_ptr<NodeType> node_;
};

}  // namespace nnr
