#include <Eigen/Core>
#include <algorithm>

#include "gdnet/core/ops.hpp"

namespace gdnet::core {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<Mat<T>>;
template <typename T>
using CMapM = Eigen::Map<const Mat<T>>;

// cols is (C*k*k) x (oh*ow) for one image.
template <typename T>
void im2col(const T* img, std::int64_t c, std::int64_t h, std::int64_t w, int k, int stride, int pad,
            std::int64_t oh, std::int64_t ow, T* cols) {
  for (std::int64_t ch = 0; ch < c; ++ch)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols + ((ch * k + ky) * k + kx) * oh * ow;
        const T* plane = img + ch * h * w;
        for (std::int64_t y = 0; y < oh; ++y) {
          const std::int64_t iy = y * stride - pad + ky;
          T* dst = row + y * ow;
          if (iy < 0 || iy >= h) {
            std::fill_n(dst, ow, T(0));
            continue;
          }
          const T* src = plane + iy * w;
          if (stride == 1) {
            const std::int64_t shift = kx - pad;
            for (std::int64_t x = 0; x < ow; ++x) {
              const std::int64_t ix = x + shift;
              dst[x] = (ix >= 0 && ix < w) ? src[ix] : T(0);
            }
          } else {
            for (std::int64_t x = 0; x < ow; ++x) {
              const std::int64_t ix = x * stride - pad + kx;
              dst[x] = (ix >= 0 && ix < w) ? src[ix] : T(0);
            }
          }
        }
      }
}

template <typename T>
void col2im(const T* cols, std::int64_t c, std::int64_t h, std::int64_t w, int k, int stride, int pad,
            std::int64_t oh, std::int64_t ow, T* img) {
  for (std::int64_t ch = 0; ch < c; ++ch)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const T* row = cols + ((ch * k + ky) * k + kx) * oh * ow;
        T* plane = img + ch * h * w;
        for (std::int64_t y = 0; y < oh; ++y) {
          const std::int64_t iy = y * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          const T* src = row + y * ow;
          T* dst = plane + iy * w;
          for (std::int64_t x = 0; x < ow; ++x) {
            const std::int64_t ix = x * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[x];
          }
        }
      }
}

}  // namespace

template <typename T>
Tensor<T> matmul_batched(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b) {
  if (a.rank() < 2 || a.rank() != b.rank())
    throw ContractError("matmul_batched: operands must share rank >= 2, got " + shape_str(a.shape()) + " and " +
                        shape_str(b.shape()));
  const int r = a.rank();
  std::int64_t batch = 1;
  for (int i = 0; i < r - 2; ++i) {
    if (a.shape()[static_cast<std::size_t>(i)] != b.shape()[static_cast<std::size_t>(i)])
      throw ContractError("matmul_batched: leading dims differ: " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
    batch *= a.shape()[static_cast<std::size_t>(i)];
  }
  const std::int64_t m = a.dim(-2), k = a.dim(-1);
  const std::int64_t kb = transpose_b ? b.dim(-1) : b.dim(-2);
  const std::int64_t n = transpose_b ? b.dim(-2) : b.dim(-1);
  if (k != kb)
    throw ContractError("matmul_batched: inner dims differ (" + std::to_string(k) + " vs " + std::to_string(kb) +
                        ") for " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Shape out_shape = a.shape();
  out_shape[static_cast<std::size_t>(r - 1)] = n;
  std::vector<T> out(static_cast<std::size_t>(batch * m * n));
  for (std::int64_t i = 0; i < batch; ++i) {
    CMapM<T> A(a.data().data() + i * m * k, m, k);
    MapM<T> C(out.data() + i * m * n, m, n);
    if (transpose_b) {
      CMapM<T> B(b.data().data() + i * n * k, n, k);
      C.noalias() = A * B.transpose();
    } else {
      CMapM<T> B(b.data().data() + i * k * n, k, n);
      C.noalias() = A * B;
    }
  }
  NodePtr<T> na = a.node(), nb = b.node();
  return make_result<T>(
      std::move(out_shape), std::move(out), {na, nb},
      [na, nb, batch, m, k, n, transpose_b](detail::Node<T>& self) {
        for (std::int64_t i = 0; i < batch; ++i) {
          CMapM<T> G(self.grad.data() + i * m * n, m, n);
          if (na->requires_grad) {
            na->ensure_grad();
            MapM<T> GA(na->grad.data() + i * m * k, m, k);
            if (transpose_b) {
              CMapM<T> B(nb->data.data() + i * n * k, n, k);
              GA.noalias() += G * B;
            } else {
              CMapM<T> B(nb->data.data() + i * k * n, k, n);
              GA.noalias() += G * B.transpose();
            }
          }
          if (nb->requires_grad) {
            nb->ensure_grad();
            CMapM<T> A(na->data.data() + i * m * k, m, k);
            if (transpose_b) {
              MapM<T> GB(nb->grad.data() + i * n * k, n, k);
              GB.noalias() += G.transpose() * A;
            } else {
              MapM<T> GB(nb->grad.data() + i * k * n, k, n);
              GB.noalias() += A.transpose() * G;
            }
          }
        }
      },
      "matmul_batched");
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2) throw ContractError("linear: weight must be out x in, got " + shape_str(weight.shape()));
  const std::int64_t out_f = weight.dim(0), in_f = weight.dim(1);
  if (x.dim(-1) != in_f)
    throw ContractError("linear: input features " + std::to_string(x.dim(-1)) + " != weight in-features " +
                        std::to_string(in_f));
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_f))
    throw ContractError("linear: bias shape " + shape_str(bias.shape()) + " does not match out-features " +
                        std::to_string(out_f));
  const std::int64_t rows = x.numel() / in_f;
  Shape out_shape = x.shape();
  out_shape.back() = out_f;
  std::vector<T> out(static_cast<std::size_t>(rows * out_f));
  {
    CMapM<T> X(x.data().data(), rows, in_f);
    CMapM<T> W(weight.data().data(), out_f, in_f);
    MapM<T> Y(out.data(), rows, out_f);
    Y.noalias() = X * W.transpose();
    if (bias.defined()) {
      Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> B(bias.data().data(), out_f);
      Y.rowwise() += B;
    }
  }
  NodePtr<T> nx = x.node(), nw = weight.node();
  NodePtr<T> nb = bias.defined() ? bias.node() : nullptr;
  std::vector<NodePtr<T>> inputs{nx, nw};
  if (nb) inputs.push_back(nb);
  return make_result<T>(
      std::move(out_shape), std::move(out), inputs,
      [nx, nw, nb, rows, in_f, out_f](detail::Node<T>& self) {
        CMapM<T> G(self.grad.data(), rows, out_f);
        if (nx->requires_grad) {
          nx->ensure_grad();
          MapM<T> GX(nx->grad.data(), rows, in_f);
          CMapM<T> W(nw->data.data(), out_f, in_f);
          GX.noalias() += G * W;
        }
        if (nw->requires_grad) {
          nw->ensure_grad();
          MapM<T> GW(nw->grad.data(), out_f, in_f);
          CMapM<T> X(nx->data.data(), rows, in_f);
          GW.noalias() += G.transpose() * X;
        }
        if (nb && nb->requires_grad) {
          nb->ensure_grad();
          // plain loops: Eigen reductions peel by pointer alignment, which
          // would make the summation order allocation-dependent
          const T* g = self.grad.data();
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t o = 0; o < out_f; ++o) nb->grad[static_cast<std::size_t>(o)] += g[r * out_f + o];
        }
      },
      "linear");
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride, int pad) {
  if (x.rank() != 4) throw ContractError("conv2d: input must be NCHW, got " + shape_str(x.shape()));
  if (weight.rank() != 4 || weight.dim(2) != weight.dim(3))
    throw ContractError("conv2d: weight must be OutC x InC x k x k, got " + shape_str(weight.shape()));
  if (stride < 1 || pad < 0) throw ContractError("conv2d: stride must be >= 1 and pad >= 0");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t oc = weight.dim(0);
  const int k = static_cast<int>(weight.dim(2));
  if (weight.dim(1) != c)
    throw ContractError("conv2d: input channels " + std::to_string(c) + " != kernel in-channels " +
                        std::to_string(weight.dim(1)));
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != oc))
    throw ContractError("conv2d: bias shape " + shape_str(bias.shape()) + " does not match out-channels " +
                        std::to_string(oc));
  const std::int64_t oh = (h + 2 * pad - k) / stride + 1;
  const std::int64_t ow = (w + 2 * pad - k) / stride + 1;
  if (h + 2 * pad < k || w + 2 * pad < k) throw ContractError("conv2d: kernel larger than padded input");
  const std::int64_t ckk = c * k * k, plane = oh * ow;
  std::vector<T> out(static_cast<std::size_t>(n * oc * plane));
  std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
  CMapM<T> W(weight.data().data(), oc, ckk);
  for (std::int64_t i = 0; i < n; ++i) {
    im2col(x.data().data() + i * c * h * w, c, h, w, k, stride, pad, oh, ow, cols.data());
    MapM<T> Y(out.data() + i * oc * plane, oc, plane);
    Y.noalias() = W * CMapM<T>(cols.data(), ckk, plane);
    if (bias.defined()) {
      Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> B(bias.data().data(), oc);
      Y.colwise() += B;
    }
  }
  NodePtr<T> nx = x.node(), nw = weight.node();
  NodePtr<T> nb = bias.defined() ? bias.node() : nullptr;
  std::vector<NodePtr<T>> inputs{nx, nw};
  if (nb) inputs.push_back(nb);
  return make_result<T>(
      {n, oc, oh, ow}, std::move(out), inputs,
      [nx, nw, nb, n, c, h, w, oc, k, stride, pad, oh, ow](detail::Node<T>& self) {
        const std::int64_t ckk = c * k * k, plane = oh * ow;
        std::vector<T> cols(static_cast<std::size_t>(ckk * plane));
        CMapM<T> W(nw->data.data(), oc, ckk);
        if (nx->requires_grad) nx->ensure_grad();
        if (nw->requires_grad) nw->ensure_grad();
        if (nb && nb->requires_grad) nb->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) {
          CMapM<T> G(self.grad.data() + i * oc * plane, oc, plane);
          if (nw->requires_grad) {
            // im2col is recomputed here rather than kept alive between passes
            im2col(nx->data.data() + i * c * h * w, c, h, w, k, stride, pad, oh, ow, cols.data());
            MapM<T> GW(nw->grad.data(), oc, ckk);
            GW.noalias() += G * CMapM<T>(cols.data(), ckk, plane).transpose();
          }
          if (nb && nb->requires_grad) {
            const T* g = self.grad.data() + i * oc * plane;
            for (std::int64_t o = 0; o < oc; ++o) {
              T acc = 0;
              for (std::int64_t p = 0; p < plane; ++p) acc += g[o * plane + p];
              nb->grad[static_cast<std::size_t>(o)] += acc;
            }
          }
          if (nx->requires_grad) {
            MapM<T> GC(cols.data(), ckk, plane);
            GC.noalias() = W.transpose() * G;
            col2im(cols.data(), c, h, w, k, stride, pad, oh, ow, nx->grad.data() + i * c * h * w);
          }
        }
      },
      "conv2d");
}

#define GDNET_INSTANTIATE(T)                                                               \
  template Tensor<T> matmul_batched(const Tensor<T>&, const Tensor<T>&, bool);             \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);         \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);
GDNET_INSTANTIATE(float)
GDNET_INSTANTIATE(double)
#undef GDNET_INSTANTIATE

}  // namespace gdnet::core
