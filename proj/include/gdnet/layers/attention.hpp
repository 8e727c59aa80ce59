#pragma once

#include <memory>
#include <string>

#include "gdnet/layers/module.hpp"
#include "gdnet/layers/window.hpp"

namespace gdnet::layers {

struct AttentionConfig {
  int embed_dim = 96;
  int heads = 6;
  int window = 8;
  double overlap_ratio = 0.5;

  int head_dim() const { return embed_dim / heads; }
  void validate() const;
};

/// Learnable bias per head for each (query, key) offset inside a window pair.
/// Queries tile an M x M grid centred inside a key window of side Mk, so the
/// table has (M + Mk - 1)^2 rows.
template <typename T>
class RelativePositionBias {
 public:
  RelativePositionBias() = default;
  RelativePositionBias(ParameterStore<T>& store, const std::string& prefix, int query_side, int key_side, int heads,
                       const SeededRng& rng);

  /// heads x M^2 x Mk^2, with a leading unit dim for broadcasting.
  Tensor<T> operator()() const;

  /// Table row for every (query, key) pair, row-major over (q, k).
  static std::shared_ptr<const std::vector<std::int64_t>> index_map(int query_side, int key_side);

  Parameter<T>* table = nullptr;
  int query_side = 0;
  int key_side = 0;
  int heads = 0;
  std::shared_ptr<const std::vector<std::int64_t>> index;
};

/// Multi-head scaled dot-product attention over windows, with separate
/// query, key and value sources and an output projection.
template <typename T>
class WindowAttention {
 public:
  WindowAttention() = default;
  WindowAttention(ParameterStore<T>& store, const std::string& prefix, const AttentionConfig& cfg, int key_side,
                  const SeededRng& rng);

  /// q: B x Nq x C, k and v: B x Nk x C. Returns B x Nq x C.
  Tensor<T> operator()(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                       const std::shared_ptr<const core::AttentionMask>& mask = nullptr) const;

  /// Cross-attention over window batches; output keeps the query windows.
  Tensor<T> cross(const WindowBatch<T>& q, const WindowBatch<T>& k, const WindowBatch<T>& v,
                  const std::shared_ptr<const core::AttentionMask>& mask = nullptr) const;
  Tensor<T> self(const WindowBatch<T>& x, const std::shared_ptr<const core::AttentionMask>& mask = nullptr) const;

  AttentionConfig cfg;
  Linear<T> q_proj;
  Linear<T> k_proj;
  Linear<T> v_proj;
  Linear<T> out_proj;
  RelativePositionBias<T> bias;
  /// Off only for tests of bias-free behaviour.
  bool use_bias = true;
};

/// Windowed attention on channels-last maps. Queries come from `q_map`, keys
/// from `k_map`, values from `v_map`, all N x H x W x C. A nonzero shift uses
/// cyclically shifted windows with the region mask.
template <typename T>
Tensor<T> window_cross_attention(const WindowAttention<T>& attn, const Tensor<T>& q_map, const Tensor<T>& k_map,
                                 const Tensor<T>& v_map, int shift);

/// Overlapping cross-attention: M x M query windows from `q_map`, key/value
/// windows of side (1 + beta) M from `kv_map` with zero padding.
template <typename T>
Tensor<T> overlap_cross_attention(const WindowAttention<T>& attn, const Tensor<T>& q_map, const Tensor<T>& kv_map);

}  // namespace gdnet::layers
