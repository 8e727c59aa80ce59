#include "gdnet/layers/transformer.hpp"

namespace gdnet::layers {

using core::add;

template <typename T>
SwinLayer<T>::SwinLayer(ParameterStore<T>& store, const std::string& prefix, const AttentionConfig& cfg, int shift_,
                        const SeededRng& rng)
    : shift(shift_),
      norm1(store, prefix + "norm1.", cfg.embed_dim),
      attn(store, prefix + "attn.", cfg, cfg.window, rng),
      norm2(store, prefix + "norm2.", cfg.embed_dim),
      mlp(store, prefix + "mlp.", cfg.embed_dim, rng) {}

template <typename T>
Tensor<T> SwinLayer<T>::operator()(const Tensor<T>& x) const {
  const auto n = norm1(x);
  const auto h = add(x, window_cross_attention(attn, n, n, n, shift));
  return add(h, mlp(norm2(h)));
}

template <typename T>
ModalityGuidedLayer<T>::ModalityGuidedLayer(ParameterStore<T>& store, const std::string& prefix,
                                            const AttentionConfig& cfg, GuideRole role_, int shift_,
                                            const SeededRng& rng)
    : role(role_),
      shift(shift_),
      norm1(store, prefix + "norm1.", cfg.embed_dim),
      attn(store, prefix + "attn.", cfg, cfg.window, rng),
      norm2(store, prefix + "norm2.", cfg.embed_dim),
      mlp(store, prefix + "mlp.", cfg.embed_dim, rng) {}

template <typename T>
Tensor<T> ModalityGuidedLayer<T>::operator()(const Tensor<T>& m, const Tensor<T>& t) const {
  if (m.shape() != t.shape())
    throw ContractError("guided layer grids differ: " + core::shape_str(m.shape()) + " vs " +
                        core::shape_str(t.shape()));
  const auto mn = norm1(m);
  const auto mid = add(window_cross_attention(attn, t, t, mn, shift), m);
  auto out = add(mlp(norm2(mid)), mid);
  if (double_residual) out = add(out, m);
  return out;
}

template <typename T>
GatedAttentionLayer<T>::GatedAttentionLayer(ParameterStore<T>& store, const std::string& prefix,
                                            const AttentionConfig& cfg, int shift_, const SeededRng& rng)
    : shift(shift_),
      norm0(store, prefix + "norm0.", cfg.embed_dim),
      gate_proj(store, prefix + "gate.", cfg.embed_dim, cfg.embed_dim, rng),
      norm1(store, prefix + "norm1.", cfg.embed_dim),
      attn(store, prefix + "attn.", cfg, cfg.window, rng),
      norm2(store, prefix + "norm2.", cfg.embed_dim),
      mlp(store, prefix + "mlp.", cfg.embed_dim, rng) {}

template <typename T>
Tensor<T> GatedAttentionLayer<T>::gate(const Tensor<T>& z_ln) const {
  return core::sigmoid(gate_proj(core::mean_over(z_ln, {1, 2})));
}

template <typename T>
Tensor<T> GatedAttentionLayer<T>::operator()(const Tensor<T>& z, const Tensor<T>& t) const {
  if (z.shape() != t.shape())
    throw ContractError("gated layer grids differ: " + core::shape_str(z.shape()) + " vs " +
                        core::shape_str(t.shape()));
  const auto z_ln = norm0(z);
  const auto z_gab = core::mul(gate(z_ln), z_ln);
  const auto v = norm1(z_ln);
  const auto mid = add(add(window_cross_attention(attn, t, t, v, shift), z_gab), t);
  return add(add(mlp(norm2(mid)), mid), z_ln);
}

template <typename T>
OverlapCrossLayer<T>::OverlapCrossLayer(ParameterStore<T>& store, const std::string& prefix,
                                        const AttentionConfig& cfg, const SeededRng& rng)
    : norm_q(store, prefix + "norm_q.", cfg.embed_dim),
      norm_kv(store, prefix + "norm_kv.", cfg.embed_dim),
      attn(store, prefix + "attn.", cfg, overlapped_extent(cfg.window, cfg.overlap_ratio), rng),
      norm2(store, prefix + "norm2.", cfg.embed_dim),
      mlp(store, prefix + "mlp.", cfg.embed_dim, rng) {}

template <typename T>
Tensor<T> OverlapCrossLayer<T>::operator()(const Tensor<T>& q, const Tensor<T>& kv) const {
  const auto h = add(kv, overlap_cross_attention(attn, norm_q(q), norm_kv(kv)));
  return add(h, mlp(norm2(h)));
}

template <typename T>
OverlapTransformerLayer<T>::OverlapTransformerLayer(ParameterStore<T>& store, const std::string& prefix,
                                                    const AttentionConfig& cfg, const SeededRng& rng)
    : norm1(store, prefix + "norm1.", cfg.embed_dim),
      attn(store, prefix + "attn.", cfg, overlapped_extent(cfg.window, cfg.overlap_ratio), rng),
      norm2(store, prefix + "norm2.", cfg.embed_dim),
      mlp(store, prefix + "mlp.", cfg.embed_dim, rng) {}

template <typename T>
Tensor<T> OverlapTransformerLayer<T>::operator()(const Tensor<T>& x) const {
  const auto n = norm1(x);
  const auto h = add(x, overlap_cross_attention(attn, n, n));
  return add(h, mlp(norm2(h)));
}

template class SwinLayer<float>;
template class SwinLayer<double>;
template class ModalityGuidedLayer<float>;
template class ModalityGuidedLayer<double>;
template class GatedAttentionLayer<float>;
template class GatedAttentionLayer<double>;
template class OverlapCrossLayer<float>;
template class OverlapCrossLayer<double>;
template class OverlapTransformerLayer<float>;
template class OverlapTransformerLayer<double>;

}  // namespace gdnet::layers
