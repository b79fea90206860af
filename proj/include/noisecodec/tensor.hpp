#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "noisecodec/common.hpp"
#include "noisecodec/rng.hpp"

namespace nc {

template <typename T>
class Tensor;

namespace detail {

// One value in the compute graph. Op results keep shared pointers to their
// parents, so the graph reachable from a loss tensor stays alive until the
// loss is dropped. Parents always precede children in creation order, which
// makes any depth-first post-order a valid topological order.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated lazily; empty means "all zero"
  bool needs_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this->grad into the parents' grad buffers. Null for leaves.
  std::function<void()> backward;

  int64_t numel() const { return shape.numel(); }

  T* grad_data() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad.data();
  }
};

// While a NoGradGuard is alive on a thread, ops do not record backward
// closures or parent links.
bool grad_enabled();

}  // namespace detail

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

// Dense 4-D array (batch, channel, height, width) with optional reverse-mode
// gradient tracking. Copying a Tensor copies the handle, not the buffer.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(Shape s) { return filled(s, T(0)); }

  static Tensor filled(Shape s, T v) {
    Tensor t;
    t.node_ = std::make_shared<detail::Node<T>>();
    t.node_->shape = s;
    t.node_->value.assign(static_cast<size_t>(s.numel()), v);
    return t;
  }

  static Tensor from_data(Shape s, std::vector<T> data) {
    if (static_cast<int64_t>(data.size()) != s.numel())
      fail_shape("Tensor", "data length " + std::to_string(data.size()) +
                               " does not match shape " + s.str());
    Tensor t;
    t.node_ = std::make_shared<detail::Node<T>>();
    t.node_->shape = s;
    t.node_->value = std::move(data);
    return t;
  }

  static Tensor scalar(T v) { return filled(Shape{1, 1, 1, 1}, v); }

  static Tensor rand_uniform(Shape s, Rng& rng, T lo, T hi) {
    Tensor t = zeros(s);
    for (auto& v : t.node_->value) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
  }

  static Tensor rand_normal(Shape s, Rng& rng, T mean = T(0), T stddev = T(1)) {
    Tensor t = zeros(s);
    for (auto& v : t.node_->value) v = static_cast<T>(mean + stddev * rng.normal());
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t numel() const { return node_->numel(); }

  std::span<T> data() { return {node_->value.data(), node_->value.size()}; }
  std::span<const T> data() const { return {node_->value.data(), node_->value.size()}; }

  // Scalar extraction; requires numel() == 1.
  T item() const {
    if (numel() != 1) fail_shape("item", "tensor is not scalar: " + shape().str());
    return node_->value[0];
  }

  bool requires_grad() const { return node_->needs_grad; }

  // Marks a leaf as a differentiation target. Only valid on leaves.
  void set_requires_grad(bool v) {
    if (node_->backward) fail_shape("set_requires_grad", "not a leaf tensor");
    node_->needs_grad = v;
    if (!v) node_->grad.clear();
  }

  // Gradient buffer; empty there means all-zero (backward never reached it).
  std::span<const T> grad() const { return {node_->grad.data(), node_->grad.size()}; }
  std::span<T> grad_mut() { return {node_->grad.data(), node_->grad.size()}; }

  void zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
  }

  // A new leaf sharing no graph history. The value buffer is copied.
  Tensor detach() const {
    Tensor t;
    t.node_ = std::make_shared<detail::Node<T>>();
    t.node_->shape = node_->shape;
    t.node_->value = node_->value;
    return t;
  }

  std::shared_ptr<detail::Node<T>> node() const { return node_; }

  static Tensor from_node(std::shared_ptr<detail::Node<T>> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

// Runs reverse-mode accumulation from a scalar loss. Gradients add into any
// existing buffers; call zero_grad between steps. Each reachable node's
// backward closure runs exactly once.
template <typename T>
void backward(const Tensor<T>& loss);

namespace detail {

template <typename T>
std::shared_ptr<Node<T>> new_node(Shape shape, std::vector<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->shape = shape;
  n->value = std::move(value);
  return n;
}

}  // namespace detail

}  // namespace nc
