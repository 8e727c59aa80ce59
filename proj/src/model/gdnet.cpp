#include "gdnet/model/gdnet.hpp"

#include <cmath>

namespace gdnet::model {

using core::to_channels_first;
using core::to_channels_last;

std::string to_string(StageMode m) {
  switch (m) {
    case StageMode::Stage1: return "stage1";
    case StageMode::BranchNC: return "branch_nc";
    case StageMode::BranchLI: return "branch_li";
    case StageMode::BranchFO: return "branch_fo";
    case StageMode::Full: return "full";
  }
  return "?";
}

template <typename T>
Backbone<T>::Backbone(ParameterStore<T>& store, const std::string& prefix, const GDNetConfig& cfg,
                      const SeededRng& rng)
    : scale(cfg.scale) {
  const auto strides = cfg.backbone_strides();
  for (std::size_t i = 0; i < strides.size(); ++i)
    convs.emplace_back(store, prefix + "conv" + std::to_string(i) + ".", i == 0 ? 3 : cfg.embed_dim, cfg.embed_dim, 3,
                       strides[i], rng);
}

template <typename T>
Tensor<T> Backbone<T>::operator()(const Tensor<T>& optical) const {
  if (optical.rank() != 4 || optical.dim(1) != 3)
    throw ContractError("backbone expects N x 3 x H x W, got " + core::shape_str(optical.shape()));
  if (optical.dim(2) % scale || optical.dim(3) % scale)
    throw ContractError("optical " + core::shape_str(optical.shape()) + " not divisible by scale " +
                        std::to_string(scale));
  Tensor<T> x = optical;
  for (const auto& c : convs) x = core::leaky_relu(c(x));
  return x;
}

template <typename T>
GuidanceStack<T>::GuidanceStack(ParameterStore<T>& store, const std::string& prefix, const GDNetConfig& cfg,
                                int depth, const SeededRng& rng) {
  const auto a = cfg.attention();
  for (int i = 0; i < depth; ++i) {
    layers.emplace_back(store, prefix + "mgl" + std::to_string(i) + ".", a, layers::GuideRole::Agm,
                        layers::alternating_shift(i, a.window), rng);
    layers.back().double_residual = cfg.mgl_double_residual;
  }
}

template <typename T>
Tensor<T> GuidanceStack<T>::operator()(const Tensor<T>& optical, const Tensor<T>& thermal) const {
  Tensor<T> m = optical;
  for (const auto& l : layers) m = l(m, thermal);
  return m;
}

template <typename T>
GatedStack<T>::GatedStack(ParameterStore<T>& store, const std::string& prefix, const GDNetConfig& cfg, int depth,
                          const SeededRng& rng) {
  const auto a = cfg.attention();
  for (int i = 0; i < depth; ++i)
    layers.emplace_back(store, prefix + "gal" + std::to_string(i) + ".", a, layers::alternating_shift(i, a.window),
                        rng);
}

template <typename T>
Tensor<T> GatedStack<T>::operator()(const Tensor<T>& optical, const Tensor<T>& thermal) const {
  Tensor<T> z = optical;
  for (const auto& l : layers) z = l(z, thermal);
  return z;
}

template <typename T>
AttributeFusion<T>::AttributeFusion(ParameterStore<T>& store, const std::string& prefix, int channels,
                                    const SeededRng& rng)
    : attn_conv(store, prefix + "attn_conv.", 2, 3, 3, 1, rng),
      out_conv(store, prefix + "out_conv.", channels, channels, 3, 1, rng) {}

template <typename T>
Tensor<T> AttributeFusion<T>::maps(const Tensor<T>& f_n, const Tensor<T>& f_l, const Tensor<T>& f_f) const {
  if (f_n.shape() != f_l.shape() || f_n.shape() != f_f.shape())
    throw ContractError("fusion branches differ: " + core::shape_str(f_n.shape()) + ", " +
                        core::shape_str(f_l.shape()) + ", " + core::shape_str(f_f.shape()));
  const auto stacked = core::concat(std::vector<Tensor<T>>{f_n, f_l, f_f}, 1);
  const auto desc = core::concat(
      std::vector<Tensor<T>>{core::pool(core::PoolKind::ChannelAvg, stacked), core::pool(core::PoolKind::ChannelMax, stacked)},
      1);
  return core::sigmoid(attn_conv(desc));
}

template <typename T>
Tensor<T> AttributeFusion<T>::operator()(const Tensor<T>& f_n, const Tensor<T>& f_l, const Tensor<T>& f_f) const {
  const auto w = maps(f_n, f_l, f_f);
  const auto n = f_n.dim(0), c = f_n.dim(1), h = f_n.dim(2), wd = f_n.dim(3);
  const auto stacked = core::reshape(core::concat(std::vector<Tensor<T>>{f_n, f_l, f_f}, 1), {n, 3, c, h, wd});
  const auto weighted = core::mul(stacked, core::reshape(w, {n, 3, 1, h, wd}));
  const auto fused = core::scale(core::mean_over(weighted, {1}), T(3));
  return out_conv(core::reshape(fused, {n, c, h, wd}));
}

template <typename T>
Rmag<T>::Rmag(ParameterStore<T>& store, const std::string& prefix, const GDNetConfig& cfg, const SeededRng& rng) {
  const auto a = cfg.attention();
  mgl = layers::ModalityGuidedLayer<T>(store, prefix + "mgl.", a, layers::GuideRole::Mogm, 0, rng);
  mgl.double_residual = cfg.mgl_double_residual;
  for (int i = 0; i < cfg.stl_per_rmag; ++i)
    stls.emplace_back(store, prefix + "stl" + std::to_string(i) + ".", a, layers::alternating_shift(i, a.window), rng);
  omcl = layers::OverlapCrossLayer<T>(store, prefix + "omcl.", a, rng);
  otl = layers::OverlapTransformerLayer<T>(store, prefix + "otl.", a, rng);
  conv = Conv2d<T>(store, prefix + "conv.", cfg.embed_dim, cfg.embed_dim, 3, 1, rng);
  skip_weight = &layers::constant_param<T>(store, prefix + "skip_weight", {1}, T(1));
}

template <typename T>
Tensor<T> Rmag<T>::body(const Tensor<T>& prev, const Tensor<T>& guide) const {
  Tensor<T> x = mgl(prev, guide);
  for (const auto& s : stls) x = s(x);
  x = omcl(guide, x);
  x = otl(x);
  return to_channels_last(conv(to_channels_first(x)));
}

template <typename T>
Tensor<T> Rmag<T>::operator()(const Tensor<T>& prev, const Tensor<T>& guide, const Tensor<T>& initial) const {
  const auto w = core::reshape(skip_weight->value, {1, 1, 1, 1});
  return core::add(body(prev, guide), core::mul(initial, w));
}

template <typename T>
UpsampleHead<T>::UpsampleHead(ParameterStore<T>& store, const std::string& prefix, int channels, int mid, int s,
                              const SeededRng& rng)
    : conv1(store, prefix + "conv1.", channels, mid * s * s, 3, 1, rng),
      conv2(store, prefix + "conv2.", mid, 1, 3, 1, rng),
      scale(s) {}

template <typename T>
Tensor<T> UpsampleHead<T>::operator()(const Tensor<T>& features) const {
  return conv2(core::pixel_shuffle(conv1(features), scale));
}

template <typename T>
GDNet<T>::GDNet(const GDNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  const SeededRng rng(seed);
  const int c = cfg_.embed_dim;
  shallow = Conv2d<T>(store_, "shallow.", 1, c, 3, 1, rng);
  backbone = Backbone<T>(store_, "backbone.", cfg_, rng);
  nc = GuidanceStack<T>(store_, "agm.nc.", cfg_, cfg_.nc_mgl, rng);
  li = GuidanceStack<T>(store_, "agm.li.", cfg_, cfg_.li_mgl, rng);
  fo = GatedStack<T>(store_, "agm.fo.", cfg_, cfg_.fo_gal, rng);
  afm = AttributeFusion<T>(store_, "afm.", c, rng);
  for (int i = 0; i < cfg_.rmag_count; ++i) rmags.emplace_back(store_, "mogm.rmag" + std::to_string(i) + ".", cfg_, rng);
  head = UpsampleHead<T>(store_, "head.", c, cfg_.upsample_mid_channels, cfg_.scale, rng);
}

template <typename T>
Tensor<T> GDNet<T>::shallow_extract(const Tensor<T>& x_lr) const {
  if (x_lr.rank() != 4 || x_lr.dim(1) != 1)
    throw ContractError("thermal input must be N x 1 x h x w, got " + core::shape_str(x_lr.shape()));
  return shallow(x_lr);
}

template <typename T>
Tensor<T> GDNet<T>::nc_forward(const Tensor<T>& base, const Tensor<T>& f_initial) const {
  return to_channels_first(nc(to_channels_last(base), to_channels_last(f_initial)));
}

template <typename T>
Tensor<T> GDNet<T>::enhance(const Tensor<T>& optical) const {
  const auto n = optical.dim(0), h = optical.dim(2), w = optical.dim(3);
  const std::size_t plane = static_cast<std::size_t>(h * w);
  std::vector<T> out(static_cast<std::size_t>(optical.numel()));
  const auto src = optical.data();
  for (std::int64_t i = 0; i < n; ++i) {
    imaging::ImageRGB img(static_cast<int>(h), static_cast<int>(w));
    const std::size_t base = static_cast<std::size_t>(i) * 3 * plane;
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t ch = 0; ch < 3; ++ch) img.data[p * 3 + ch] = static_cast<float>(src[base + ch * plane + p]);
    const auto d = decomposer(img);
    if (d.enhanced.height != img.height || d.enhanced.width != img.width)
      throw ContractError("decomposer changed the image size");
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const float v = d.enhanced.data[p * 3 + ch];
        if (!std::isfinite(v) || v < 0.f || v > 1.f)
          throw ContractError("decomposer produced a value outside [0,1]: " + std::to_string(v));
        out[base + ch * plane + p] = static_cast<T>(v);
      }
  }
  return Tensor<T>::from(optical.shape(), std::move(out));
}

template <typename T>
Tensor<T> GDNet<T>::li_forward(const Tensor<T>& optical, const Tensor<T>& f_initial) const {
  const auto base = backbone(enhance(optical));
  return to_channels_first(li(to_channels_last(base), to_channels_last(f_initial)));
}

template <typename T>
Tensor<T> GDNet<T>::fo_forward(const Tensor<T>& base, const Tensor<T>& f_initial) const {
  return to_channels_first(fo(to_channels_last(base), to_channels_last(f_initial)));
}

template <typename T>
Tensor<T> GDNet<T>::guidance(const Tensor<T>& optical, const Tensor<T>& f_initial, StageMode mode) const {
  switch (mode) {
    case StageMode::Stage1: return backbone(optical);
    case StageMode::BranchNC: return nc_forward(backbone(optical), f_initial);
    case StageMode::BranchLI: return li_forward(optical, f_initial);
    case StageMode::BranchFO: return fo_forward(backbone(optical), f_initial);
    case StageMode::Full: {
      const auto base = backbone(optical);
      return afm(nc_forward(base, f_initial), li_forward(optical, f_initial), fo_forward(base, f_initial));
    }
  }
  throw ContractError("unknown stage mode");
}

template <typename T>
Tensor<T> GDNet<T>::forward(const Tensor<T>& x_lr, const Tensor<T>& optical, StageMode mode) const {
  if (x_lr.rank() != 4 || optical.rank() != 4 || x_lr.dim(0) != optical.dim(0) ||
      optical.dim(2) != x_lr.dim(2) * cfg_.scale || optical.dim(3) != x_lr.dim(3) * cfg_.scale)
    throw ContractError("optical " + core::shape_str(optical.shape()) + " is not thermal " +
                        core::shape_str(x_lr.shape()) + " x" + std::to_string(cfg_.scale));
  if (x_lr.dim(2) % cfg_.window || x_lr.dim(3) % cfg_.window)
    throw ContractError("thermal grid " + core::shape_str(x_lr.shape()) + " is not a multiple of the window " +
                        std::to_string(cfg_.window));
  const auto f_initial = shallow_extract(x_lr);
  const auto f0 = to_channels_last(f_initial);
  const auto s = to_channels_last(guidance(optical, f_initial, mode));
  Tensor<T> stream = f0;
  for (const auto& r : rmags) stream = r(stream, s, f0);
  return head(to_channels_first(stream));
}

#define GDNET_INSTANTIATE(T)        \
  template class Backbone<T>;       \
  template class GuidanceStack<T>;  \
  template class GatedStack<T>;     \
  template class AttributeFusion<T>; \
  template class Rmag<T>;           \
  template class UpsampleHead<T>;   \
  template class GDNet<T>;
GDNET_INSTANTIATE(float)
GDNET_INSTANTIATE(double)
#undef GDNET_INSTANTIATE

}  // namespace gdnet::model
