#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "gdnet/core/tensor.hpp"

// Differentiable primitives. Every function records a vector-Jacobian product
// on the tape when any input requires a gradient. Feature maps are NCHW unless
// stated; transformer layers work on channels-last (N, H, W, C) token maps.
namespace gdnet::core {

// ---- elementwise (same-rank broadcasting: each dim equal or 1) -------------
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);

enum class Activation { LeakyRelu, Sigmoid, Gelu };
inline constexpr double kLeakySlope = 0.2;

template <typename T> Tensor<T> leaky_relu(const Tensor<T>& x, T slope = T(kLeakySlope));
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
/// Exact (erf) GELU.
template <typename T> Tensor<T> gelu(const Tensor<T>& x);
template <typename T> Tensor<T> activation(Activation kind, const Tensor<T>& x);

// ---- reductions ------------------------------------------------------------
template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
/// Mean over `axes`, keeping them as size-1 dims.
template <typename T> Tensor<T> mean_over(const Tensor<T>& x, std::vector<int> axes);
/// Max over one axis (kept as size 1). Gradient goes to the first maximal
/// element in scan order.
template <typename T> Tensor<T> max_over(const Tensor<T>& x, int axis);

enum class PoolKind { GlobalAvg, ChannelAvg, ChannelMax };
/// NCHW pooling: GlobalAvg -> N x C x 1 x 1, Channel* -> N x 1 x H x W.
template <typename T> Tensor<T> pool(PoolKind kind, const Tensor<T>& x);

// ---- layout ----------------------------------------------------------------
template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T> Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& order);
template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& xs, int axis);
/// NCHW <-> NHWC.
template <typename T> Tensor<T> to_channels_last(const Tensor<T>& x);
template <typename T> Tensor<T> to_channels_first(const Tensor<T>& x);

/// Row gather over the last dim: x is viewed as rows of length C = last dim;
/// output row r copies source row index[r], or zeros when index[r] < 0.
/// `out_shape` must end with C and hold index.size() rows.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::shared_ptr<const std::vector<std::int64_t>> index,
                      Shape out_shape);

/// out[n, c, h*r + a, w*r + b] = in[n, c*r*r + a*r + b, h, w]
template <typename T> Tensor<T> pixel_shuffle(const Tensor<T>& x, int r);
/// Exact inverse of pixel_shuffle.
template <typename T> Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r);

// ---- linear algebra --------------------------------------------------------
/// (..., m, k) x (..., k, n), or (..., n, k) when transpose_b. Leading dims
/// must be equal.
template <typename T>
Tensor<T> matmul_batched(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b = false);
/// Affine map over the last dim: y = x W^T + b, W is out x in. `bias` may be
/// undefined.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);
/// NCHW convolution with square kernels. `bias` may be undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int pad);

// ---- normalization / attention ---------------------------------------------
inline constexpr double kLayerNormEps = 1e-5;
/// Normalizes each row of the last dim, then applies gamma/beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(kLayerNormEps));

/// Allowed (1) / excluded (0) score positions for `groups` windows, each
/// `rows x cols`. Excluded positions behave as -inf before the softmax.
struct AttentionMask {
  std::int64_t groups = 0;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::uint8_t> allowed;
};

template <typename T> Tensor<T> softmax_lastdim(const Tensor<T>& x);
/// x is (B, heads, rows, cols) with B a multiple of mask.groups; batch item b
/// uses mask group b % groups.
template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x, const std::shared_ptr<const AttentionMask>& mask);

}  // namespace gdnet::core
