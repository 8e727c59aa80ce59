#include "gdnet/model/decomposer.hpp"

#include <algorithm>
#include <cmath>

namespace gdnet::model {

Decomposition retinex_decompose_default(const imaging::ImageRGB& img) {
  imaging::ImagePlane peak(img.height, img.width);
  for (std::size_t i = 0; i < peak.data.size(); ++i)
    peak.data[i] = std::max({img.data[i * 3], img.data[i * 3 + 1], img.data[i * 3 + 2]});
  Decomposition d;
  d.illumination = imaging::gaussian_blur(peak, kRetinexSigma, kRetinexRadius);
  d.reflectance = img;
  d.enhanced = img;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double l = d.illumination.data[i / 3];
    const double r = img.data[i] / (l + kRetinexFloor);
    d.reflectance.data[i] = static_cast<float>(r);
    d.enhanced.data[i] = static_cast<float>(std::clamp(r * std::pow(l, kRetinexLift), 0.0, 1.0));
  }
  return d;
}

Decomposition identity_decompose(const imaging::ImageRGB& img) {
  return {img, imaging::ImagePlane(img.height, img.width, 1.f), img};
}

}  // namespace gdnet::model
