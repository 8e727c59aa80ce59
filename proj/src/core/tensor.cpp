#include "gdnet/core/tensor.hpp"

#include <sstream>

namespace gdnet::core {

namespace {
thread_local bool g_grad_enabled = true;
}

std::int64_t numel_of(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw ContractError("tensor dims must be positive, got " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape& shape) {
  return full(shape, T(0));
}

template <typename T>
Tensor<T> Tensor<T>::full(const Shape& shape, T value) {
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->data.assign(static_cast<std::size_t>(numel_of(shape)), value);
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from(const Shape& shape, std::vector<T> values) {
  if (numel_of(shape) != static_cast<std::int64_t>(values.size()))
    throw ContractError("tensor data length " + std::to_string(values.size()) +
                        " does not match shape " + shape_str(shape));
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->data = std::move(values);
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::leaf(const Shape& shape, std::vector<T> values, bool requires_grad) {
  Tensor t = from(shape, std::move(values));
  t.node_->requires_grad = requires_grad;
  return t;
}

template <typename T>
std::int64_t Tensor<T>::dim(int i) const {
  const int r = rank();
  if (i < 0) i += r;
  if (i < 0 || i >= r) throw ContractError("dim index out of range for " + shape_str(shape()));
  return node_->shape[static_cast<std::size_t>(i)];
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  if (!node_->leaf) throw ContractError("only leaf tensors may be modified in place");
  return node_->data;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ContractError("item() needs a single-element tensor, got " + shape_str(shape()));
  return node_->data[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool flag) {
  if (!node_->leaf) throw ContractError("requires_grad can only be toggled on leaves");
  node_->requires_grad = flag;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  node_->ensure_grad();
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(shape(), node_->data);
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data,
                      std::vector<std::shared_ptr<detail::Node<T>>> inputs,
                      std::function<void(detail::Node<T>&)> backward, const char* op) {
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->leaf = false;
  node->op = op;
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) needs = needs || (in && in->requires_grad);
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

template class Tensor<float>;
template class Tensor<double>;

template Tensor<float> make_result(Shape, std::vector<float>,
                                   std::vector<std::shared_ptr<detail::Node<float>>>,
                                   std::function<void(detail::Node<float>&)>, const char*);
template Tensor<double> make_result(Shape, std::vector<double>,
                                    std::vector<std::shared_ptr<detail::Node<double>>>,
                                    std::function<void(detail::Node<double>&)>, const char*);

}  // namespace gdnet::core
