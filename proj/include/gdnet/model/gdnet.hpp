#pragma once

#include <string>
#include <vector>

#include "gdnet/layers/transformer.hpp"
#include "gdnet/model/config.hpp"
#include "gdnet/model/decomposer.hpp"

namespace gdnet::model {

using core::Tensor;
using layers::Conv2d;
using layers::ParameterStore;
using layers::SeededRng;

/// Which optical guidance reaches the fusion groups.
enum class StageMode {
  Stage1,    // backbone features only
  BranchNC,  // one guidance branch alone
  BranchLI,
  BranchFO,
  Full,  // all three branches fused by the attribute-aware module
};
std::string to_string(StageMode m);

/// k conv3x3 + LeakyReLU sets, strided down to the thermal LR grid.
template <typename T>
class Backbone {
 public:
  Backbone() = default;
  Backbone(ParameterStore<T>& store, const std::string& prefix, const GDNetConfig& cfg, const SeededRng& rng);
  /// N x 3 x H x W -> N x C x H/scale x W/scale.
  Tensor<T> operator()(const Tensor<T>& optical) const;

  std::vector<Conv2d<T>> convs;
  int scale = 4;
};

/// Normal-condition / low-light branch body: a stack of guided layers with
/// thermal queries and keys.
template <typename T>
class GuidanceStack {
 public:
  GuidanceStack() = default;
  GuidanceStack(ParameterStore<T>& store, const std::string& prefix, const GDNetConfig& cfg, int depth,
                const SeededRng& rng);
  /// Channels-last optical features and thermal guide.
  Tensor<T> operator()(const Tensor<T>& optical, const Tensor<T>& thermal) const;

  std::vector<layers::ModalityGuidedLayer<T>> layers;
};

/// Fog branch body: gated attention layers.
template <typename T>
class GatedStack {
 public:
  GatedStack() = default;
  GatedStack(ParameterStore<T>& store, const std::string& prefix, const GDNetConfig& cfg, int depth,
             const SeededRng& rng);
  Tensor<T> operator()(const Tensor<T>& optical, const Tensor<T>& thermal) const;

  std::vector<layers::GatedAttentionLayer<T>> layers;
};

/// Spatial attention fusion of the three branch features (NCHW).
template <typename T>
class AttributeFusion {
 public:
  AttributeFusion() = default;
  AttributeFusion(ParameterStore<T>& store, const std::string& prefix, int channels, const SeededRng& rng);
  Tensor<T> operator()(const Tensor<T>& f_n, const Tensor<T>& f_l, const Tensor<T>& f_f) const;
  /// Sigmoid weight maps, N x 3 x h x w.
  Tensor<T> maps(const Tensor<T>& f_n, const Tensor<T>& f_l, const Tensor<T>& f_f) const;

  Conv2d<T> attn_conv;  // 2 -> 3
  Conv2d<T> out_conv;   // C -> C
};

/// One residual multiple attention group. Token maps are channels-last.
template <typename T>
class Rmag {
 public:
  Rmag() = default;
  Rmag(ParameterStore<T>& store, const std::string& prefix, const GDNetConfig& cfg, const SeededRng& rng);
  Tensor<T> operator()(const Tensor<T>& prev, const Tensor<T>& guide, const Tensor<T>& initial) const;
  /// Everything before the weighted skip.
  Tensor<T> body(const Tensor<T>& prev, const Tensor<T>& guide) const;

  layers::ModalityGuidedLayer<T> mgl;
  std::vector<layers::SwinLayer<T>> stls;
  layers::OverlapCrossLayer<T> omcl;
  layers::OverlapTransformerLayer<T> otl;
  Conv2d<T> conv;
  layers::Parameter<T>* skip_weight = nullptr;
};

/// conv C -> mid*s^2, pixel shuffle, conv mid -> 1.
template <typename T>
class UpsampleHead {
 public:
  UpsampleHead() = default;
  UpsampleHead(ParameterStore<T>& store, const std::string& prefix, int channels, int mid, int scale,
               const SeededRng& rng);
  Tensor<T> operator()(const Tensor<T>& features) const;

  Conv2d<T> conv1;
  Conv2d<T> conv2;
  int scale = 4;
};

template <typename T>
class GDNet {
 public:
  GDNet(const GDNetConfig& cfg, std::uint64_t seed);
  GDNet(const GDNet&) = delete;
  GDNet& operator=(const GDNet&) = delete;

  /// x_lr: N x 1 x h x w thermal, optical: N x 3 x (h*scale) x (w*scale).
  /// Returns N x 1 x (h*scale) x (w*scale).
  Tensor<T> forward(const Tensor<T>& x_lr, const Tensor<T>& optical, StageMode mode) const;

  /// N x C x h x w initial thermal features.
  Tensor<T> shallow_extract(const Tensor<T>& x_lr) const;
  /// Branch features on the LR grid, N x C x h x w. `base` is the shared
  /// backbone output for the raw optical input.
  Tensor<T> nc_forward(const Tensor<T>& base, const Tensor<T>& f_initial) const;
  Tensor<T> li_forward(const Tensor<T>& optical, const Tensor<T>& f_initial) const;
  Tensor<T> fo_forward(const Tensor<T>& base, const Tensor<T>& f_initial) const;
  /// Fused optical guidance S for `mode`, N x C x h x w.
  Tensor<T> guidance(const Tensor<T>& optical, const Tensor<T>& f_initial, StageMode mode) const;
  /// The low-light branch's decomposer applied per sample; output validated.
  Tensor<T> enhance(const Tensor<T>& optical) const;

  const GDNetConfig& config() const { return cfg_; }
  ParameterStore<T>& parameters() { return store_; }
  const ParameterStore<T>& parameters() const { return store_; }

  Decomposer decomposer = retinex_decompose_default;

  ParameterStore<T> store_;
  GDNetConfig cfg_;
  Conv2d<T> shallow;
  Backbone<T> backbone;
  GuidanceStack<T> nc;
  GuidanceStack<T> li;
  GatedStack<T> fo;
  AttributeFusion<T> afm;
  std::vector<Rmag<T>> rmags;
  UpsampleHead<T> head;
};

}  // namespace gdnet::model
