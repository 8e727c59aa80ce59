#include "gdnet/layers/attention.hpp"

#include <cmath>

namespace gdnet::layers {

void AttentionConfig::validate() const {
  if (embed_dim <= 0 || heads <= 0 || embed_dim % heads)
    throw ContractError("embed dim " + std::to_string(embed_dim) + " not divisible by heads " + std::to_string(heads));
  if (window <= 0) throw ContractError("window must be positive");
  overlapped_extent(window, overlap_ratio);
}

template <typename T>
RelativePositionBias<T>::RelativePositionBias(ParameterStore<T>& store, const std::string& prefix, int q_side,
                                              int k_side, int n_heads, const SeededRng& rng)
    : query_side(q_side), key_side(k_side), heads(n_heads), index(index_map(q_side, k_side)) {
  const std::int64_t span = q_side + k_side - 1;
  table = &truncated_normal_param<T>(store, prefix + "table", {span * span, n_heads}, kAffineInitStd, rng);
}

template <typename T>
std::shared_ptr<const std::vector<std::int64_t>> RelativePositionBias<T>::index_map(int q_side, int k_side) {
  const int pad = (k_side - q_side) / 2;
  const int span = q_side + k_side - 1;
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  idx->reserve(static_cast<std::size_t>(q_side) * q_side * k_side * k_side);
  for (int qy = 0; qy < q_side; ++qy)
    for (int qx = 0; qx < q_side; ++qx)
      for (int ky = 0; ky < k_side; ++ky)
        for (int kx = 0; kx < k_side; ++kx) {
          // query offset inside the key window minus key position, shifted to >= 0
          const int dy = qy + pad - ky + (k_side - 1 - pad);
          const int dx = qx + pad - kx + (k_side - 1 - pad);
          idx->push_back(static_cast<std::int64_t>(dy) * span + dx);
        }
  return idx;
}

template <typename T>
Tensor<T> RelativePositionBias<T>::operator()() const {
  const std::int64_t nq = static_cast<std::int64_t>(query_side) * query_side;
  const std::int64_t nk = static_cast<std::int64_t>(key_side) * key_side;
  auto rows = core::gather_rows(table->value, index, {nq, nk, heads});
  return core::reshape(core::permute(rows, {2, 0, 1}), {1, heads, nq, nk});
}

template <typename T>
WindowAttention<T>::WindowAttention(ParameterStore<T>& store, const std::string& prefix, const AttentionConfig& c,
                                    int key_side, const SeededRng& rng)
    : cfg(c),
      q_proj(store, prefix + "q.", c.embed_dim, c.embed_dim, rng),
      k_proj(store, prefix + "k.", c.embed_dim, c.embed_dim, rng),
      v_proj(store, prefix + "v.", c.embed_dim, c.embed_dim, rng),
      out_proj(store, prefix + "proj.", c.embed_dim, c.embed_dim, rng),
      bias(store, prefix + "rpb.", c.window, key_side, c.heads, rng) {
  c.validate();
}

namespace {

// B x N x C -> B x heads x N x d
template <typename T>
Tensor<T> split_heads(const Tensor<T>& x, int heads) {
  const auto b = x.dim(0), n = x.dim(1), c = x.dim(2);
  return core::permute(core::reshape(x, {b, n, heads, c / heads}), {0, 2, 1, 3});
}

}  // namespace

template <typename T>
Tensor<T> WindowAttention<T>::operator()(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                         const std::shared_ptr<const core::AttentionMask>& mask) const {
  if (q.rank() != 3 || k.rank() != 3 || v.rank() != 3)
    throw ContractError("attention expects B x N x C inputs");
  if (q.dim(2) != cfg.embed_dim || k.dim(2) != cfg.embed_dim || v.dim(2) != cfg.embed_dim)
    throw ContractError("attention channel mismatch: q " + core::shape_str(q.shape()) + ", k " +
                        core::shape_str(k.shape()) + ", v " + core::shape_str(v.shape()) + ", embed " +
                        std::to_string(cfg.embed_dim));
  if (k.dim(0) != q.dim(0) || v.dim(0) != q.dim(0) || v.dim(1) != k.dim(1))
    throw ContractError("attention token mismatch: q " + core::shape_str(q.shape()) + ", k " +
                        core::shape_str(k.shape()) + ", v " + core::shape_str(v.shape()));
  const auto b = q.dim(0), nq = q.dim(1);
  const auto qh = split_heads(q_proj(q), cfg.heads);
  const auto kh = split_heads(k_proj(k), cfg.heads);
  const auto vh = split_heads(v_proj(v), cfg.heads);
  auto scores = core::scale(core::matmul_batched(qh, kh, true), T(1.0 / std::sqrt(static_cast<double>(cfg.head_dim()))));
  if (use_bias) {
    const auto rpb = bias();
    if (rpb.dim(2) != nq || rpb.dim(3) != k.dim(1))
      throw ContractError("relative bias " + core::shape_str(rpb.shape()) + " does not fit " + std::to_string(nq) +
                          " queries x " + std::to_string(k.dim(1)) + " keys");
    scores = core::add(scores, rpb);
  }
  const auto attn = core::softmax_lastdim(scores, mask);
  const auto out = core::permute(core::matmul_batched(attn, vh), {0, 2, 1, 3});
  return out_proj(core::reshape(out, {b, nq, cfg.embed_dim}));
}

template <typename T>
Tensor<T> WindowAttention<T>::cross(const WindowBatch<T>& q, const WindowBatch<T>& k, const WindowBatch<T>& v,
                                    const std::shared_ptr<const core::AttentionMask>& mask) const {
  return (*this)(q.windows, k.windows, v.windows, mask);
}

template <typename T>
Tensor<T> WindowAttention<T>::self(const WindowBatch<T>& x, const std::shared_ptr<const core::AttentionMask>& mask) const {
  return (*this)(x.windows, x.windows, x.windows, mask);
}

template <typename T>
Tensor<T> window_cross_attention(const WindowAttention<T>& attn, const Tensor<T>& q_map, const Tensor<T>& k_map,
                                 const Tensor<T>& v_map, int shift) {
  if (q_map.shape() != k_map.shape() || q_map.shape() != v_map.shape())
    throw ContractError("cross-attention grids differ: " + core::shape_str(q_map.shape()) + " vs " +
                        core::shape_str(k_map.shape()) + " vs " + core::shape_str(v_map.shape()));
  const int m = attn.cfg.window;
  auto qw = window_partition(q_map, m, shift);
  const auto mask = shift_mask(q_map.dim(1), q_map.dim(2), m, shift);
  Tensor<T> out;
  if (&k_map == &q_map && &v_map == &q_map) {
    out = attn.self(qw, mask);
  } else {
    out = attn.cross(qw, window_partition(k_map, m, shift), window_partition(v_map, m, shift), mask);
  }
  qw.windows = out;
  return window_reverse(qw);
}

template <typename T>
Tensor<T> overlap_cross_attention(const WindowAttention<T>& attn, const Tensor<T>& q_map, const Tensor<T>& kv_map) {
  if (q_map.shape() != kv_map.shape())
    throw ContractError("overlapping attention grids differ: " + core::shape_str(q_map.shape()) + " vs " +
                        core::shape_str(kv_map.shape()));
  const int m = attn.cfg.window;
  auto qw = window_partition(q_map, m, 0);
  const auto kv = overlap_partition(kv_map, m, attn.bias.key_side);
  qw.windows = attn.cross(qw, kv, kv);
  return window_reverse(qw);
}

#define GDNET_INSTANTIATE(T)                                                                                 \
  template class RelativePositionBias<T>;                                                                    \
  template class WindowAttention<T>;                                                                         \
  template Tensor<T> window_cross_attention(const WindowAttention<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                            const Tensor<T>&, int);                                          \
  template Tensor<T> overlap_cross_attention(const WindowAttention<T>&, const Tensor<T>&, const Tensor<T>&);
GDNET_INSTANTIATE(float)
GDNET_INSTANTIATE(double)
#undef GDNET_INSTANTIATE

}  // namespace gdnet::layers
