#include "gdnet/core/resize.hpp"

#include <cmath>

namespace gdnet::core {

double keys_cubic(double x) {
  constexpr double a = -0.5;
  const double ax = std::fabs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

namespace {

std::int64_t reflect(std::int64_t i, std::int64_t n) {
  const std::int64_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

struct AxisWeights {
  std::int64_t taps = 0;
  std::vector<std::int64_t> index;  // out_len * taps
  std::vector<double> weight;
};

AxisWeights axis_weights(std::int64_t in_len, std::int64_t out_len) {
  const double scale = static_cast<double>(out_len) / static_cast<double>(in_len);
  const double stretch = scale < 1.0 ? scale : 1.0;
  const double width = 4.0 / stretch;
  AxisWeights aw;
  aw.taps = static_cast<std::int64_t>(std::ceil(width)) + 2;
  aw.index.resize(static_cast<std::size_t>(out_len * aw.taps));
  aw.weight.resize(aw.index.size());
  for (std::int64_t i = 0; i < out_len; ++i) {
    const double center = (static_cast<double>(i) + 0.5) / scale - 0.5;
    const std::int64_t first = static_cast<std::int64_t>(std::floor(center - width / 2.0));
    double total = 0.0;
    for (std::int64_t t = 0; t < aw.taps; ++t) {
      const std::int64_t src = first + t;
      const double wgt = stretch * keys_cubic(stretch * (center - static_cast<double>(src)));
      aw.index[static_cast<std::size_t>(i * aw.taps + t)] = reflect(src, in_len);
      aw.weight[static_cast<std::size_t>(i * aw.taps + t)] = wgt;
      total += wgt;
    }
    for (std::int64_t t = 0; t < aw.taps; ++t) aw.weight[static_cast<std::size_t>(i * aw.taps + t)] /= total;
  }
  return aw;
}

}  // namespace

std::vector<double> resize_plane(std::span<const double> src, std::int64_t h, std::int64_t w, std::int64_t oh,
                                 std::int64_t ow) {
  if (oh <= 0 || ow <= 0) throw ContractError("bicubic_resize: target dims must be positive");
  if (static_cast<std::int64_t>(src.size()) != h * w) throw ContractError("bicubic_resize: plane size mismatch");
  const AxisWeights wx = axis_weights(w, ow);
  const AxisWeights wy = axis_weights(h, oh);
  // horizontal pass: h x ow
  std::vector<double> tmp(static_cast<std::size_t>(h * ow));
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::int64_t t = 0; t < wx.taps; ++t) {
        const auto k = static_cast<std::size_t>(x * wx.taps + t);
        acc += wx.weight[k] * src[static_cast<std::size_t>(y * w + wx.index[k])];
      }
      tmp[static_cast<std::size_t>(y * ow + x)] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (std::int64_t y = 0; y < oh; ++y)
    for (std::int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::int64_t t = 0; t < wy.taps; ++t) {
        const auto k = static_cast<std::size_t>(y * wy.taps + t);
        acc += wy.weight[k] * tmp[static_cast<std::size_t>(wy.index[k] * ow + x)];
      }
      out[static_cast<std::size_t>(y * ow + x)] = acc;
    }
  return out;
}

template <typename T>
Tensor<T> bicubic_resize(const Tensor<T>& img, double scale) {
  if (img.rank() < 2) throw ContractError("bicubic_resize needs at least 2 dims");
  if (!(scale > 0.0)) throw ContractError("bicubic_resize: scale must be positive");
  const std::int64_t h = img.dim(-2), w = img.dim(-1);
  const auto oh = static_cast<std::int64_t>(std::llround(static_cast<double>(h) * scale));
  const auto ow = static_cast<std::int64_t>(std::llround(static_cast<double>(w) * scale));
  if (oh <= 0 || ow <= 0)
    throw ContractError("bicubic_resize: target dims " + std::to_string(oh) + "x" + std::to_string(ow) +
                        " must be positive");
  const std::int64_t planes = img.numel() / (h * w);
  Shape out_shape = img.shape();
  out_shape[out_shape.size() - 2] = oh;
  out_shape[out_shape.size() - 1] = ow;
  std::vector<T> out(static_cast<std::size_t>(planes * oh * ow));
  std::vector<double> plane(static_cast<std::size_t>(h * w));
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t i = 0; i < h * w; ++i) plane[static_cast<std::size_t>(i)] = img[p * h * w + i];
    const auto r = resize_plane(plane, h, w, oh, ow);
    for (std::int64_t i = 0; i < oh * ow; ++i) out[static_cast<std::size_t>(p * oh * ow + i)] = static_cast<T>(r[static_cast<std::size_t>(i)]);
  }
  return Tensor<T>::from(out_shape, std::move(out));
}

template Tensor<float> bicubic_resize(const Tensor<float>&, double);
template Tensor<double> bicubic_resize(const Tensor<double>&, double);

}  // namespace gdnet::core
