#pragma once

#include "gdnet/layers/attention.hpp"

namespace gdnet::layers {

/// Token maps are channels-last N x H x W x C throughout.

/// Swin block: x + MSA(LN(x)), then + MLP(LN(.)).
template <typename T>
class SwinLayer {
 public:
  SwinLayer() = default;
  SwinLayer(ParameterStore<T>& store, const std::string& prefix, const AttentionConfig& cfg, int shift,
            const SeededRng& rng);
  Tensor<T> operator()(const Tensor<T>& x) const;

  int shift = 0;
  LayerNorm<T> norm1;
  WindowAttention<T> attn;
  LayerNorm<T> norm2;
  Mlp<T> mlp;
};

/// Which modality each stream carries. Both roles compute the same flow;
/// only the meaning of M and T changes.
enum class GuideRole {
  Agm,   // M optical, T thermal: queries and keys from thermal
  Mogm,  // M thermal, T optical guidance: queries and keys from optical
};

/// Modality-guided layer, queries and keys from the guide T, values from the
/// normalised stream M which also carries the residual:
///   M' = MCA(LN(M), T) + M
///   out = MLP(LN(M')) + M' + M
template <typename T>
class ModalityGuidedLayer {
 public:
  ModalityGuidedLayer() = default;
  ModalityGuidedLayer(ParameterStore<T>& store, const std::string& prefix, const AttentionConfig& cfg, GuideRole role,
                      int shift, const SeededRng& rng);
  Tensor<T> operator()(const Tensor<T>& m, const Tensor<T>& t) const;

  GuideRole role = GuideRole::Agm;
  int shift = 0;
  /// Carries the input a second time into the output (the "+ M" term).
  bool double_residual = true;
  LayerNorm<T> norm1;
  WindowAttention<T> attn;
  LayerNorm<T> norm2;
  Mlp<T> mlp;
};

/// Gated attention layer:
///   Z_LN = LN(Z)
///   Z_gab = sigmoid(W mean_tokens(Z_LN) + b) * Z_LN
///   Z' = MCA(LN(Z_LN), T) + Z_gab + T
///   out = MLP(LN(Z')) + Z' + Z_LN
template <typename T>
class GatedAttentionLayer {
 public:
  GatedAttentionLayer() = default;
  GatedAttentionLayer(ParameterStore<T>& store, const std::string& prefix, const AttentionConfig& cfg, int shift,
                      const SeededRng& rng);
  Tensor<T> operator()(const Tensor<T>& z, const Tensor<T>& t) const;
  /// Channel gate in (0, 1), N x 1 x 1 x C.
  Tensor<T> gate(const Tensor<T>& z_ln) const;

  int shift = 0;
  LayerNorm<T> norm0;
  Linear<T> gate_proj;
  LayerNorm<T> norm1;
  WindowAttention<T> attn;
  LayerNorm<T> norm2;
  Mlp<T> mlp;
};

/// Overlapping cross-attention layer: queries from `q` windows, keys and
/// values from enlarged windows of `kv`.
///   out' = kv + OMCA(LN(q), LN(kv));  out = out' + MLP(LN(out'))
template <typename T>
class OverlapCrossLayer {
 public:
  OverlapCrossLayer() = default;
  OverlapCrossLayer(ParameterStore<T>& store, const std::string& prefix, const AttentionConfig& cfg,
                    const SeededRng& rng);
  Tensor<T> operator()(const Tensor<T>& q, const Tensor<T>& kv) const;

  LayerNorm<T> norm_q;
  LayerNorm<T> norm_kv;
  WindowAttention<T> attn;
  LayerNorm<T> norm2;
  Mlp<T> mlp;
};

/// Overlapping self-attention layer with the Swin residual pattern.
template <typename T>
class OverlapTransformerLayer {
 public:
  OverlapTransformerLayer() = default;
  OverlapTransformerLayer(ParameterStore<T>& store, const std::string& prefix, const AttentionConfig& cfg,
                          const SeededRng& rng);
  Tensor<T> operator()(const Tensor<T>& x) const;

  LayerNorm<T> norm1;
  WindowAttention<T> attn;
  LayerNorm<T> norm2;
  Mlp<T> mlp;
};

/// Alternating shift for the i-th layer of a stack: 0, M/2, 0, M/2, ...
inline int alternating_shift(int i, int window) { return i % 2 ? window / 2 : 0; }

}  // namespace gdnet::layers
