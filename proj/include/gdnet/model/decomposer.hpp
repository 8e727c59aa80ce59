#pragma once

#include <functional>

#include "gdnet/imaging/image.hpp"

namespace gdnet::model {

struct Decomposition {
  imaging::ImageRGB reflectance;
  imaging::ImagePlane illumination;
  imaging::ImageRGB enhanced;
};

/// Any image -> (reflectance, illumination, enhanced) model can drive the
/// low-light branch.
using Decomposer = std::function<Decomposition(const imaging::ImageRGB&)>;

inline constexpr double kRetinexSigma = 5.0;
inline constexpr int kRetinexRadius = 15;
inline constexpr double kRetinexFloor = 1e-4;
inline constexpr double kRetinexLift = 0.4;

/// Single-scale Retinex: illumination is the Gaussian-smoothed channel max,
/// reflectance = img / (illumination + 1e-4), enhanced =
/// reflectance * illumination^0.4 clamped to [0, 1].
Decomposition retinex_decompose_default(const imaging::ImageRGB& img);

/// Leaves the image untouched (unit illumination).
Decomposition identity_decompose(const imaging::ImageRGB& img);

}  // namespace gdnet::model
