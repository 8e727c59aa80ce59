#include <cmath>
#include <limits>

#include "gdnet/core/ops.hpp"

namespace gdnet::core {

namespace {
template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const std::int64_t c = x.dim(-1);
  if (gamma.numel() != c || beta.numel() != c)
    throw ContractError("layer_norm: gamma/beta must have " + std::to_string(c) + " elements");
  const std::int64_t rows = x.numel() / c;
  std::vector<T> out(static_cast<std::size_t>(x.numel()));
  // normalized values and inverse std are kept for the backward pass
  auto xhat = std::make_shared<std::vector<T>>(out.size());
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(rows));
  const T* px = x.data().data();
  const T* pg = gamma.data().data();
  const T* pb = beta.data().data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* row = px + r * c;
    T mu = 0;
    for (std::int64_t i = 0; i < c; ++i) mu += row[i];
    mu /= static_cast<T>(c);
    T var = 0;
    for (std::int64_t i = 0; i < c; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<T>(c);
    const T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[static_cast<std::size_t>(r)] = is;
    for (std::int64_t i = 0; i < c; ++i) {
      const T xh = (row[i] - mu) * is;
      (*xhat)[static_cast<std::size_t>(r * c + i)] = xh;
      out[static_cast<std::size_t>(r * c + i)] = xh * pg[i] + pb[i];
    }
  }
  NodePtr<T> nx = x.node(), ng = gamma.node(), nb = beta.node();
  return make_result<T>(
      x.shape(), std::move(out), {nx, ng, nb},
      [nx, ng, nb, xhat, inv_std, rows, c](detail::Node<T>& self) {
        const T* g = self.grad.data();
        const T* xh = xhat->data();
        if (ng->requires_grad) {
          ng->ensure_grad();
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t i = 0; i < c; ++i) ng->grad[static_cast<std::size_t>(i)] += g[r * c + i] * xh[r * c + i];
        }
        if (nb->requires_grad) {
          nb->ensure_grad();
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t i = 0; i < c; ++i) nb->grad[static_cast<std::size_t>(i)] += g[r * c + i];
        }
        if (nx->requires_grad) {
          nx->ensure_grad();
          const T* pg = ng->data.data();
          std::vector<T> dxh(static_cast<std::size_t>(c));
          for (std::int64_t r = 0; r < rows; ++r) {
            T mean_d = 0, mean_dx = 0;
            for (std::int64_t i = 0; i < c; ++i) {
              dxh[static_cast<std::size_t>(i)] = g[r * c + i] * pg[i];
              mean_d += dxh[static_cast<std::size_t>(i)];
              mean_dx += dxh[static_cast<std::size_t>(i)] * xh[r * c + i];
            }
            mean_d /= static_cast<T>(c);
            mean_dx /= static_cast<T>(c);
            const T is = (*inv_std)[static_cast<std::size_t>(r)];
            for (std::int64_t i = 0; i < c; ++i)
              nx->grad[static_cast<std::size_t>(r * c + i)] +=
                  is * (dxh[static_cast<std::size_t>(i)] - mean_d - xh[r * c + i] * mean_dx);
          }
        }
      },
      "layer_norm");
}

namespace {

// Shared softmax kernel. `allowed` (may be null) selects the per-row mask.
template <typename T>
Tensor<T> softmax_impl(const Tensor<T>& x, const std::shared_ptr<const AttentionMask>& mask, std::int64_t heads) {
  const std::int64_t cols = x.dim(-1);
  const std::int64_t rows = x.numel() / cols;
  std::vector<T> out(static_cast<std::size_t>(x.numel()));
  const T* px = x.data().data();
  const std::int64_t mask_rows = mask ? mask->rows : 0;
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* in = px + r * cols;
    T* o = out.data() + r * cols;
    const std::uint8_t* allow = nullptr;
    if (mask) {
      const std::int64_t batch = r / (heads * mask_rows);
      const std::int64_t g = batch % mask->groups;
      allow = mask->allowed.data() + (g * mask_rows + r % mask_rows) * cols;
    }
    T mx = -std::numeric_limits<T>::infinity();
    for (std::int64_t i = 0; i < cols; ++i)
      if (!allow || allow[i]) mx = std::max(mx, in[i]);
    T total = 0;
    for (std::int64_t i = 0; i < cols; ++i) {
      const T e = (!allow || allow[i]) ? std::exp(in[i] - mx) : T(0);
      o[i] = e;
      total += e;
    }
    const T inv = T(1) / total;
    for (std::int64_t i = 0; i < cols; ++i) o[i] *= inv;
  }
  NodePtr<T> nx = x.node();
  return make_result<T>(
      x.shape(), std::move(out), {nx},
      [nx, rows, cols](detail::Node<T>& self) {
        nx->ensure_grad();
        for (std::int64_t r = 0; r < rows; ++r) {
          const T* y = self.data.data() + r * cols;
          const T* g = self.grad.data() + r * cols;
          T dot = 0;
          for (std::int64_t i = 0; i < cols; ++i) dot += y[i] * g[i];
          T* dst = nx->grad.data() + r * cols;
          for (std::int64_t i = 0; i < cols; ++i) dst[i] += y[i] * (g[i] - dot);
        }
      },
      "softmax");
}

}  // namespace

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  return softmax_impl<T>(x, nullptr, 1);
}

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x, const std::shared_ptr<const AttentionMask>& mask) {
  if (!mask) return softmax_lastdim(x);
  if (x.rank() != 4) throw ContractError("masked softmax expects (B, heads, rows, cols) scores");
  if (x.dim(2) != mask->rows || x.dim(3) != mask->cols || x.dim(0) % mask->groups != 0)
    throw ContractError("masked softmax: mask " + std::to_string(mask->groups) + "x" + std::to_string(mask->rows) +
                        "x" + std::to_string(mask->cols) + " does not fit scores " + shape_str(x.shape()));
  return softmax_impl<T>(x, mask, x.dim(1));
}

#define GDNET_INSTANTIATE(T)                                                                   \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);     \
  template Tensor<T> softmax_lastdim(const Tensor<T>&);                                        \
  template Tensor<T> softmax_lastdim(const Tensor<T>&, const std::shared_ptr<const AttentionMask>&);
GDNET_INSTANTIATE(float)
GDNET_INSTANTIATE(double)
#undef GDNET_INSTANTIATE

}  // namespace gdnet::core
