#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gdnet/core/error.hpp"

namespace gdnet::core {

using Shape = std::vector<std::int64_t>;

std::int64_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

// One record of the define-by-run tape. A node owns its value and (lazily)
// its gradient; `backward` pushes `grad` into the nodes listed in `inputs`.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

}  // namespace detail

/// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Dense row-major array with optional tape linkage. Copies share the same
/// underlying node; values produced by operations are never mutated.
template <typename T>
class Tensor {
 public:
  using Node = detail::Node<T>;
  using Scalar = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, T value);
  static Tensor from(const Shape& shape, std::vector<T> values);
  /// Leaf that participates in differentiation.
  static Tensor leaf(const Shape& shape, std::vector<T> values, bool requires_grad);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t dim(int i) const;
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->data.size()); }

  std::span<const T> data() const { return node_->data; }
  /// Only leaves may be written in place (parameter updates, test setup).
  std::span<T> mutable_data();
  const T& operator[](std::int64_t i) const { return node_->data[static_cast<std::size_t>(i)]; }
  T item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool is_leaf() const { return node_->leaf; }
  void set_requires_grad(bool flag);
  /// Gradient accumulated by backward(); empty when none has flowed here.
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad();
  void zero_grad();

  /// Same values, cut from the tape.
  Tensor detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Builds the result of an operation. The backward closure is dropped when no
/// input requires a gradient or recording is disabled.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data,
                      std::vector<std::shared_ptr<detail::Node<T>>> inputs,
                      std::function<void(detail::Node<T>&)> backward, const char* op);

/// Detached copy in another precision.
template <typename To, typename From>
Tensor<To> convert(const Tensor<From>& src) {
  std::vector<To> values(src.data().begin(), src.data().end());
  return Tensor<To>::from(src.shape(), std::move(values));
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace gdnet::core
