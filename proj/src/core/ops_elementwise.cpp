#include <cmath>

#include "gdnet/core/ops.hpp"
#include "broadcast.hpp"

namespace gdnet::core {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

enum class BinOp { Add, Sub, Mul };

template <typename T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, BinOp kind, const char* name) {
  auto plan = std::make_shared<detail::BroadcastPlan>(a.shape(), b.shape(), name);
  std::vector<T> out(static_cast<std::size_t>(numel_of(plan->out)));
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  switch (kind) {
    case BinOp::Add: plan->for_each([&](auto o, auto i, auto j) { out[o] = pa[i] + pb[j]; }); break;
    case BinOp::Sub: plan->for_each([&](auto o, auto i, auto j) { out[o] = pa[i] - pb[j]; }); break;
    case BinOp::Mul: plan->for_each([&](auto o, auto i, auto j) { out[o] = pa[i] * pb[j]; }); break;
  }
  NodePtr<T> na = a.node(), nb = b.node();
  return make_result<T>(
      plan->out, std::move(out), {na, nb},
      [na, nb, plan, kind](detail::Node<T>& self) {
        const T* g = self.grad.data();
        if (na->requires_grad) {
          na->ensure_grad();
          T* ga = na->grad.data();
          if (kind == BinOp::Mul) {
            const T* vb = nb->data.data();
            plan->for_each([&](auto o, auto i, auto j) { ga[i] += g[o] * vb[j]; });
          } else {
            plan->for_each([&](auto o, auto i, auto) { ga[i] += g[o]; });
          }
        }
        if (nb->requires_grad) {
          nb->ensure_grad();
          T* gb = nb->grad.data();
          if (kind == BinOp::Mul) {
            const T* va = na->data.data();
            plan->for_each([&](auto o, auto i, auto j) { gb[j] += g[o] * va[i]; });
          } else if (kind == BinOp::Sub) {
            plan->for_each([&](auto o, auto, auto j) { gb[j] -= g[o]; });
          } else {
            plan->for_each([&](auto o, auto, auto j) { gb[j] += g[o]; });
          }
        }
      },
      name);
}

// Pointwise map with derivative expressed through input x and output y.
template <typename T, typename F, typename D>
Tensor<T> unary(const Tensor<T>& x, F&& f, D&& dfdx, const char* name) {
  const auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  NodePtr<T> nx = x.node();
  return make_result<T>(
      x.shape(), std::move(out), {nx},
      [nx, dfdx](detail::Node<T>& self) {
        nx->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          nx->grad[i] += self.grad[i] * dfdx(nx->data[i], self.data[i]);
      },
      name);
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::Add, "add");
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::Sub, "sub");
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::Mul, "mul");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  return unary(
      a, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; }, "scale");
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  return unary(
      x, [slope](T v) { return v >= T(0) ? v : v * slope; },
      [slope](T v, T) { return v >= T(0) ? T(1) : slope; }, "leaky_relu");
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary(
      x,
      [](T v) {
        // split by sign so exp never overflows
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); }, "sigmoid");
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return unary(
      x, [](T v) { return T(0.5) * v * (T(1) + std::erf(v * T(kInvSqrt2))); },
      [](T v, T) {
        const T cdf = T(0.5) * (T(1) + std::erf(v * T(kInvSqrt2)));
        const T pdf = T(kInvSqrt2Pi) * std::exp(T(-0.5) * v * v);
        return cdf + v * pdf;
      },
      "gelu");
}

template <typename T>
Tensor<T> activation(Activation kind, const Tensor<T>& x) {
  switch (kind) {
    case Activation::LeakyRelu: return leaky_relu(x);
    case Activation::Sigmoid: return sigmoid(x);
    case Activation::Gelu: return gelu(x);
  }
  throw ContractError("unknown activation");
}

#define GDNET_INSTANTIATE(T)                                        \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> scale(const Tensor<T>&, T);                    \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);               \
  template Tensor<T> sigmoid(const Tensor<T>&);                     \
  template Tensor<T> gelu(const Tensor<T>&);                        \
  template Tensor<T> activation(Activation, const Tensor<T>&);
GDNET_INSTANTIATE(float)
GDNET_INSTANTIATE(double)
#undef GDNET_INSTANTIATE

}  // namespace gdnet::core
