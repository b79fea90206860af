#include "noisecodec/tensor.hpp"

#include <unordered_set>

namespace nc {

namespace detail {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

}  // namespace detail

NoGradGuard::NoGradGuard() : saved_(detail::grad_enabled()) {
  detail::g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { detail::g_grad_enabled = saved_; }

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.numel() != 1)
    fail_shape("backward", "loss must be scalar, got " + loss.shape().str());
  check_finite(loss.data().data(), 1, "backward");

  using Node = detail::Node<T>;
  // Iterative post-order DFS; the resulting list is topologically ordered
  // (parents before children), so grads run over it in reverse.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* n;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  Node* root = loss.node().get();
  if (!root->needs_grad) return;  // nothing requires gradients
  stack.push_back({root, 0});
  visited.insert(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.n->parents.size()) {
      Node* p = f.n->parents[f.next_parent++].get();
      if (p->needs_grad && visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  root->grad_data()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward();
  }
}

template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace nc
