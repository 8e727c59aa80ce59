#include "gdnet/core/autograd.hpp"

#include <unordered_set>

namespace gdnet::core {

template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || !loss.requires_grad())
    throw ContractError("backward: loss is detached from the tape (no input requires a gradient)");
  if (loss.numel() != 1) throw ContractError("backward: loss must be a scalar, got " + shape_str(loss.shape()));

  using NodeT = detail::Node<T>;
  // iterative post-order DFS gives a topological order
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      NodeT* child = node->inputs[next++].get();
      if (child && child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (NodeT* n : order)
    if (!n->leaf) n->grad.assign(n->data.size(), T(0));
  NodeT* root = loss.node().get();
  root->ensure_grad();
  root->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* n = *it;
    if (!n->leaf && n->backward) n->backward(*n);
  }
}

template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x, T eps) {
  Tensor<T> probe = Tensor<T>::from(x.shape(), std::vector<T>(x.data().begin(), x.data().end()));
  std::vector<T> out(static_cast<std::size_t>(x.numel()));
  auto values = probe.mutable_data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T saved = values[i];
    values[i] = saved + eps;
    const T up = f(probe);
    values[i] = saved - eps;
    const T down = f(probe);
    values[i] = saved;
    out[i] = (up - down) / (T(2) * eps);
  }
  return Tensor<T>::from(x.shape(), std::move(out));
}

template void backward(const Tensor<float>&);
template void backward(const Tensor<double>&);
template Tensor<float> finite_diff_grad(const std::function<float(const Tensor<float>&)>&, const Tensor<float>&, float);
template Tensor<double> finite_diff_grad(const std::function<double(const Tensor<double>&)>&, const Tensor<double>&,
                                         double);

}  // namespace gdnet::core
