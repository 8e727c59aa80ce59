#pragma once

#include <cstdint>
#include <vector>

#include "gdnet/core/tensor.hpp"

namespace gdnet::imaging {

/// Single-channel image, row-major, values nominally in [0, 1].
struct ImagePlane {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  ImagePlane() = default;
  ImagePlane(int h, int w, float fill = 0.f);

  float& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }
};

/// Interleaved H x W x 3 RGB image.
struct ImageRGB {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  ImageRGB() = default;
  ImageRGB(int h, int w, float fill = 0.f);

  float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  ImagePlane channel(int c) const;
  void set_channel(int c, const ImagePlane& p);
};

void clamp01(ImagePlane& p);
void clamp01(ImageRGB& img);

/// 1 x 1 x H x W tensor.
core::Tensor<float> to_tensor(const ImagePlane& p);
/// 1 x 3 x H x W tensor.
core::Tensor<float> to_tensor(const ImageRGB& img);
/// Accepts any tensor whose last two dims are H x W and whose leading dims
/// multiply to one.
ImagePlane plane_from_tensor(const core::Tensor<float>& t);
ImageRGB rgb_from_tensor(const core::Tensor<float>& t);

/// Separable Gaussian blur with a (2*radius+1) tap normalized kernel and
/// symmetric reflection at the borders.
ImagePlane gaussian_blur(const ImagePlane& p, double sigma, int radius);

/// Bicubic resize by `scale` with the shared resampling kernel.
ImagePlane resize(const ImagePlane& p, double scale);

/// Rec. 601 luma.
ImagePlane luminance(const ImageRGB& img);

}  // namespace gdnet::imaging
