#include "gdnet/imaging/image.hpp"

#include <algorithm>
#include <cmath>

#include "gdnet/core/error.hpp"
#include "gdnet/core/resize.hpp"

namespace gdnet::imaging {

ImagePlane::ImagePlane(int h, int w, float fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {
  if (h <= 0 || w <= 0) throw ContractError("image dims must be positive");
}

ImageRGB::ImageRGB(int h, int w, float fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * 3, fill) {
  if (h <= 0 || w <= 0) throw ContractError("image dims must be positive");
}

ImagePlane ImageRGB::channel(int c) const {
  ImagePlane p(height, width);
  for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] = data[i * 3 + static_cast<std::size_t>(c)];
  return p;
}

void ImageRGB::set_channel(int c, const ImagePlane& p) {
  if (p.height != height || p.width != width) throw ContractError("channel dims do not match image");
  for (std::size_t i = 0; i < p.data.size(); ++i) data[i * 3 + static_cast<std::size_t>(c)] = p.data[i];
}

void clamp01(ImagePlane& p) {
  for (auto& v : p.data) v = std::clamp(v, 0.f, 1.f);
}
void clamp01(ImageRGB& img) {
  for (auto& v : img.data) v = std::clamp(v, 0.f, 1.f);
}

core::Tensor<float> to_tensor(const ImagePlane& p) {
  return core::Tensor<float>::from({1, 1, p.height, p.width}, p.data);
}

core::Tensor<float> to_tensor(const ImageRGB& img) {
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  std::vector<float> v(n * 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c) v[c * n + i] = img.data[i * 3 + c];
  return core::Tensor<float>::from({1, 3, img.height, img.width}, std::move(v));
}

ImagePlane plane_from_tensor(const core::Tensor<float>& t) {
  const auto h = t.dim(-2), w = t.dim(-1);
  if (t.numel() != h * w) throw ContractError("expected a single plane, got " + core::shape_str(t.shape()));
  ImagePlane p(static_cast<int>(h), static_cast<int>(w));
  std::copy(t.data().begin(), t.data().end(), p.data.begin());
  return p;
}

ImageRGB rgb_from_tensor(const core::Tensor<float>& t) {
  const auto h = t.dim(-2), w = t.dim(-1);
  if (t.rank() < 3 || t.dim(-3) != 3 || t.numel() != 3 * h * w)
    throw ContractError("expected a 3 x H x W tensor, got " + core::shape_str(t.shape()));
  ImageRGB img(static_cast<int>(h), static_cast<int>(w));
  const std::size_t n = static_cast<std::size_t>(h * w);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c) img.data[i * 3 + c] = t.data()[c * n + i];
  return img;
}

namespace {

int reflect(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - 1 - i;
  return i;
}

}  // namespace

ImagePlane gaussian_blur(const ImagePlane& p, double sigma, int radius) {
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += k[static_cast<std::size_t>(i + radius)];
  }
  for (auto& v : k) v /= total;
  const int h = p.height, w = p.width;
  std::vector<double> tmp(p.data.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * p.at(y, reflect(x + i, w));
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  ImagePlane out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(reflect(y + i, h)) * w + x];
      out.at(y, x) = static_cast<float>(acc);
    }
  return out;
}

ImagePlane resize(const ImagePlane& p, double scale) {
  const auto oh = std::llround(p.height * scale), ow = std::llround(p.width * scale);
  if (oh <= 0 || ow <= 0) throw ContractError("resize scale too small for image");
  std::vector<double> src(p.data.begin(), p.data.end());
  auto dst = core::resize_plane(src, p.height, p.width, oh, ow);
  ImagePlane out(static_cast<int>(oh), static_cast<int>(ow));
  for (std::size_t i = 0; i < dst.size(); ++i) out.data[i] = static_cast<float>(dst[i]);
  return out;
}

ImagePlane luminance(const ImageRGB& img) {
  ImagePlane p(img.height, img.width);
  for (std::size_t i = 0; i < p.data.size(); ++i)
    p.data[i] = 0.299f * img.data[i * 3] + 0.587f * img.data[i * 3 + 1] + 0.114f * img.data[i * 3 + 2];
  return p;
}

}  // namespace gdnet::imaging
