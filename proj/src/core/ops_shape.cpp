#include <algorithm>
#include <cstring>
#include <numeric>

#include "broadcast.hpp"
#include "gdnet/core/ops.hpp"

namespace gdnet::core {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

int normalize_axis(int axis, int rank, const char* op) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank)
    throw ContractError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for rank " +
                        std::to_string(rank));
  return axis;
}

std::vector<std::int64_t> strides_of(const Shape& s) {
  std::vector<std::int64_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

}  // namespace

// ---- reductions ------------------------------------------------------------

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.data()) acc += v;
  NodePtr<T> nx = x.node();
  return make_result<T>(
      {1}, {acc}, {nx},
      [nx](detail::Node<T>& self) {
        nx->ensure_grad();
        const T g = self.grad[0];
        for (auto& v : nx->grad) v += g;
      },
      "sum");
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
Tensor<T> mean_over(const Tensor<T>& x, std::vector<int> axes) {
  const int r = x.rank();
  Shape out_shape = x.shape();
  std::int64_t count = 1;
  for (int& a : axes) {
    a = normalize_axis(a, r, "mean_over");
    count *= out_shape[static_cast<std::size_t>(a)];
    out_shape[static_cast<std::size_t>(a)] = 1;
  }
  // broadcast the reduced shape back over the input to map indices
  auto plan = std::make_shared<detail::BroadcastPlan>(x.shape(), out_shape, "mean_over");
  std::vector<T> out(static_cast<std::size_t>(numel_of(out_shape)), T(0));
  const T* px = x.data().data();
  plan->for_each([&](auto, auto i, auto j) { out[j] += px[i]; });
  const T inv = T(1) / static_cast<T>(count);
  for (auto& v : out) v *= inv;
  NodePtr<T> nx = x.node();
  return make_result<T>(
      out_shape, std::move(out), {nx},
      [nx, plan, inv](detail::Node<T>& self) {
        nx->ensure_grad();
        T* g = nx->grad.data();
        const T* go = self.grad.data();
        plan->for_each([&](auto, auto i, auto j) { g[i] += go[j] * inv; });
      },
      "mean_over");
}

template <typename T>
Tensor<T> max_over(const Tensor<T>& x, int axis) {
  const int r = x.rank();
  axis = normalize_axis(axis, r, "max_over");
  const Shape& s = x.shape();
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[static_cast<std::size_t>(i)];
  for (int i = axis + 1; i < r; ++i) inner *= s[static_cast<std::size_t>(i)];
  const std::int64_t len = s[static_cast<std::size_t>(axis)];
  Shape out_shape = s;
  out_shape[static_cast<std::size_t>(axis)] = 1;
  std::vector<T> out(static_cast<std::size_t>(outer * inner));
  auto arg = std::make_shared<std::vector<std::int64_t>>(out.size());
  const T* px = x.data().data();
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t i = 0; i < inner; ++i) {
      std::int64_t best = o * len * inner + i;
      for (std::int64_t k = 1; k < len; ++k) {
        const std::int64_t idx = (o * len + k) * inner + i;
        if (px[idx] > px[best]) best = idx;
      }
      out[static_cast<std::size_t>(o * inner + i)] = px[best];
      (*arg)[static_cast<std::size_t>(o * inner + i)] = best;
    }
  }
  NodePtr<T> nx = x.node();
  return make_result<T>(
      out_shape, std::move(out), {nx},
      [nx, arg](detail::Node<T>& self) {
        nx->ensure_grad();
        for (std::size_t i = 0; i < arg->size(); ++i) nx->grad[static_cast<std::size_t>((*arg)[i])] += self.grad[i];
      },
      "max_over");
}

template <typename T>
Tensor<T> pool(PoolKind kind, const Tensor<T>& x) {
  if (x.rank() != 4) throw ContractError("pool expects an NCHW tensor, got " + shape_str(x.shape()));
  switch (kind) {
    case PoolKind::GlobalAvg: return mean_over(x, {2, 3});
    case PoolKind::ChannelAvg: return mean_over(x, {1});
    case PoolKind::ChannelMax: return max_over(x, 1);
  }
  throw ContractError("unknown pool kind");
}

// ---- layout ----------------------------------------------------------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel_of(shape) != x.numel())
    throw ContractError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape) + " changes element count");
  std::vector<T> out(x.data().begin(), x.data().end());
  NodePtr<T> nx = x.node();
  return make_result<T>(
      std::move(shape), std::move(out), {nx},
      [nx](detail::Node<T>& self) {
        nx->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) nx->grad[i] += self.grad[i];
      },
      "reshape");
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& order) {
  const int r = x.rank();
  if (static_cast<int>(order.size()) != r) throw ContractError("permute: order length must equal rank");
  std::vector<bool> seen(static_cast<std::size_t>(r), false);
  for (int o : order) {
    if (o < 0 || o >= r || seen[static_cast<std::size_t>(o)]) throw ContractError("permute: invalid axis order");
    seen[static_cast<std::size_t>(o)] = true;
  }
  const Shape& in_shape = x.shape();
  const auto in_strides = strides_of(in_shape);
  Shape out_shape(static_cast<std::size_t>(r));
  std::vector<std::int64_t> src_stride(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    out_shape[static_cast<std::size_t>(i)] = in_shape[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    src_stride[static_cast<std::size_t>(i)] = in_strides[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  }
  // source offset of every output element, in output order
  const std::int64_t total = x.numel();
  auto map = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(total));
  {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(r), 0);
    std::int64_t src = 0;
    const std::int64_t inner = out_shape.back();
    const std::int64_t inner_stride = src_stride.back();
    for (std::int64_t o = 0; o < total; o += inner) {
      for (std::int64_t j = 0; j < inner; ++j) (*map)[static_cast<std::size_t>(o + j)] = src + j * inner_stride;
      for (int d = r - 2; d >= 0; --d) {
        const auto du = static_cast<std::size_t>(d);
        ++idx[du];
        src += src_stride[du];
        if (idx[du] < out_shape[du]) break;
        src -= src_stride[du] * out_shape[du];
        idx[du] = 0;
      }
    }
  }
  std::vector<T> out(static_cast<std::size_t>(total));
  const T* px = x.data().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = px[(*map)[i]];
  NodePtr<T> nx = x.node();
  return make_result<T>(
      std::move(out_shape), std::move(out), {nx},
      [nx, map](detail::Node<T>& self) {
        nx->ensure_grad();
        T* g = nx->grad.data();
        for (std::size_t i = 0; i < map->size(); ++i) g[(*map)[i]] += self.grad[i];
      },
      "permute");
}

template <typename T>
Tensor<T> to_channels_last(const Tensor<T>& x) {
  if (x.rank() != 4) throw ContractError("to_channels_last expects NCHW, got " + shape_str(x.shape()));
  return permute(x, {0, 2, 3, 1});
}

template <typename T>
Tensor<T> to_channels_first(const Tensor<T>& x) {
  if (x.rank() != 4) throw ContractError("to_channels_first expects NHWC, got " + shape_str(x.shape()));
  return permute(x, {0, 3, 1, 2});
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& xs, int axis) {
  if (xs.empty()) throw ContractError("concat of zero tensors");
  const int r = xs.front().rank();
  axis = normalize_axis(axis, r, "concat");
  Shape out_shape = xs.front().shape();
  out_shape[static_cast<std::size_t>(axis)] = 0;
  for (const auto& t : xs) {
    if (t.rank() != r) throw ContractError("concat: rank mismatch");
    for (int d = 0; d < r; ++d)
      if (d != axis && t.shape()[static_cast<std::size_t>(d)] != xs.front().shape()[static_cast<std::size_t>(d)])
        throw ContractError("concat: shape mismatch " + shape_str(t.shape()) + " vs " +
                            shape_str(xs.front().shape()) + " at dim " + std::to_string(d));
    out_shape[static_cast<std::size_t>(axis)] += t.shape()[static_cast<std::size_t>(axis)];
  }
  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= out_shape[static_cast<std::size_t>(d)];
  for (int d = axis + 1; d < r; ++d) inner *= out_shape[static_cast<std::size_t>(d)];
  const std::int64_t out_len = out_shape[static_cast<std::size_t>(axis)];
  std::vector<T> out(static_cast<std::size_t>(numel_of(out_shape)));
  std::vector<std::shared_ptr<detail::Node<T>>> nodes;
  std::vector<std::int64_t> offsets;
  std::int64_t off = 0;
  for (const auto& t : xs) {
    const std::int64_t len = t.shape()[static_cast<std::size_t>(axis)];
    const T* src = t.data().data();
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy_n(src + o * len * inner, len * inner, out.data() + (o * out_len + off) * inner);
    nodes.push_back(t.node());
    offsets.push_back(off);
    off += len;
  }
  return make_result<T>(
      out_shape, std::move(out), nodes,
      [nodes, offsets, outer, inner, out_len, axis](detail::Node<T>& self) {
        for (std::size_t k = 0; k < nodes.size(); ++k) {
          auto& n = *nodes[k];
          if (!n.requires_grad) continue;
          n.ensure_grad();
          const std::int64_t len = n.shape[static_cast<std::size_t>(axis)];
          for (std::int64_t o = 0; o < outer; ++o) {
            const T* g = self.grad.data() + (o * out_len + offsets[k]) * inner;
            T* dst = n.grad.data() + o * len * inner;
            for (std::int64_t i = 0; i < len * inner; ++i) dst[i] += g[i];
          }
        }
      },
      "concat");
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::shared_ptr<const std::vector<std::int64_t>> index,
                      Shape out_shape) {
  if (out_shape.empty() || out_shape.back() != x.shape().back())
    throw ContractError("gather_rows: output row width must equal source last dim");
  const std::int64_t width = x.shape().back();
  const std::int64_t src_rows = x.numel() / width;
  if (numel_of(out_shape) != static_cast<std::int64_t>(index->size()) * width)
    throw ContractError("gather_rows: index length does not match output shape " + shape_str(out_shape));
  std::vector<T> out(static_cast<std::size_t>(numel_of(out_shape)), T(0));
  const T* px = x.data().data();
  for (std::size_t r = 0; r < index->size(); ++r) {
    const std::int64_t s = (*index)[r];
    if (s < 0) continue;
    if (s >= src_rows) throw ContractError("gather_rows: index out of range");
    std::memcpy(out.data() + static_cast<std::int64_t>(r) * width, px + s * width, sizeof(T) * static_cast<std::size_t>(width));
  }
  NodePtr<T> nx = x.node();
  return make_result<T>(
      std::move(out_shape), std::move(out), {nx},
      [nx, index, width](detail::Node<T>& self) {
        nx->ensure_grad();
        for (std::size_t r = 0; r < index->size(); ++r) {
          const std::int64_t s = (*index)[r];
          if (s < 0) continue;
          T* dst = nx->grad.data() + s * width;
          const T* g = self.grad.data() + static_cast<std::int64_t>(r) * width;
          for (std::int64_t c = 0; c < width; ++c) dst[c] += g[c];
        }
      },
      "gather_rows");
}

namespace {

// Offset map shared by pixel_shuffle (forward gather) and its inverse.
std::shared_ptr<std::vector<std::int64_t>> shuffle_map(std::int64_t n, std::int64_t c, std::int64_t h,
                                                       std::int64_t w, int r) {
  // map[out_index] = in_index for pixel_shuffle of an N x (c*r*r) x h x w input
  const std::int64_t oh = h * r, ow = w * r;
  auto map = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(n * c * oh * ow));
  std::size_t k = 0;
  for (std::int64_t in = 0; in < n; ++in)
    for (std::int64_t ic = 0; ic < c; ++ic)
      for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t x = 0; x < ow; ++x) {
          const std::int64_t a = y % r, b = x % r;
          const std::int64_t src_c = ic * r * r + a * r + b;
          (*map)[k++] = ((in * c * r * r + src_c) * h + y / r) * w + x / r;
        }
  return map;
}

template <typename T>
Tensor<T> apply_map(const Tensor<T>& x, Shape out_shape, std::shared_ptr<std::vector<std::int64_t>> map,
                    bool inverse, const char* name) {
  std::vector<T> out(static_cast<std::size_t>(x.numel()));
  const T* px = x.data().data();
  if (!inverse) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = px[(*map)[i]];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[static_cast<std::size_t>((*map)[i])] = px[i];
  }
  NodePtr<T> nx = x.node();
  return make_result<T>(
      std::move(out_shape), std::move(out), {nx},
      [nx, map, inverse](detail::Node<T>& self) {
        nx->ensure_grad();
        if (!inverse) {
          for (std::size_t i = 0; i < map->size(); ++i) nx->grad[static_cast<std::size_t>((*map)[i])] += self.grad[i];
        } else {
          for (std::size_t i = 0; i < map->size(); ++i) nx->grad[i] += self.grad[static_cast<std::size_t>((*map)[i])];
        }
      },
      name);
}

}  // namespace

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
  if (x.rank() != 4 || r < 1) throw ContractError("pixel_shuffle expects NCHW input and r >= 1");
  const auto& s = x.shape();
  if (s[1] % (r * r) != 0)
    throw ContractError("pixel_shuffle: channels " + std::to_string(s[1]) + " not divisible by r^2 = " +
                        std::to_string(r * r));
  const std::int64_t c = s[1] / (r * r);
  return apply_map(x, {s[0], c, s[2] * r, s[3] * r}, shuffle_map(s[0], c, s[2], s[3], r), false, "pixel_shuffle");
}

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r) {
  if (x.rank() != 4 || r < 1) throw ContractError("pixel_unshuffle expects NCHW input and r >= 1");
  const auto& s = x.shape();
  if (s[2] % r != 0 || s[3] % r != 0)
    throw ContractError("pixel_unshuffle: spatial dims " + shape_str(s) + " not divisible by r");
  const std::int64_t h = s[2] / r, w = s[3] / r;
  return apply_map(x, {s[0], s[1] * r * r, h, w}, shuffle_map(s[0], s[1], h, w, r), true, "pixel_unshuffle");
}

#define GDNET_INSTANTIATE(T)                                                                          \
  template Tensor<T> sum(const Tensor<T>&);                                                           \
  template Tensor<T> mean(const Tensor<T>&);                                                          \
  template Tensor<T> mean_over(const Tensor<T>&, std::vector<int>);                                   \
  template Tensor<T> max_over(const Tensor<T>&, int);                                                 \
  template Tensor<T> pool(PoolKind, const Tensor<T>&);                                                \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<int>&);                              \
  template Tensor<T> to_channels_last(const Tensor<T>&);                                              \
  template Tensor<T> to_channels_first(const Tensor<T>&);                                             \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, int);                                      \
  template Tensor<T> gather_rows(const Tensor<T>&, std::shared_ptr<const std::vector<std::int64_t>>, \
                                 Shape);                                                              \
  template Tensor<T> pixel_shuffle(const Tensor<T>&, int);                                            \
  template Tensor<T> pixel_unshuffle(const Tensor<T>&, int);
GDNET_INSTANTIATE(float)
GDNET_INSTANTIATE(double)
#undef GDNET_INSTANTIATE

}  // namespace gdnet::core
