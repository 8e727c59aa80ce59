#pragma once

#include <array>
#include <limits>
#include <string>

#include "gdnet/core/rng.hpp"
#include "gdnet/imaging/image.hpp"

namespace gdnet::imaging {

struct LowLightParams {
  std::array<double, 3> zeta{1, 1, 1};
  std::array<double, 3> eta{1, 1, 1};
  std::array<double, 3> theta{1, 1, 1};
};

/// zeta ~ U(0.6, 0.9), eta ~ U(0.3, 0.5), theta ~ U(3, 5) per channel.
LowLightParams sample_low_light(core::SeededRng& rng);

/// out_c = eta_c * (zeta_c * in_c)^theta_c, clamped.
ImageRGB simulate_low_light(const ImageRGB& img, const LowLightParams& params);

struct NoiseParams {
  double sigma_g = 0.0;
  /// Poisson(photon_scale * x) / photon_scale. Infinity disables shot noise.
  double photon_scale = std::numeric_limits<double>::infinity();
};

/// photon_scale ~ U[500, 5000], sigma_g ~ U[1e-3, 1e-2].
NoiseParams sample_noise(core::SeededRng& rng);

enum class CrfDirection { Forward, Inverse };

/// Gamma 2.2 response. Inverse maps to linear light (x^2.2).
double crf(double x, CrfDirection dir);
ImageRGB crf(const ImageRGB& img, CrfDirection dir);

/// RGGB: (0,0) red, (0,1) and (1,0) green, (1,1) blue.
ImagePlane bayer_mosaic(const ImageRGB& img);
/// Bilinear interpolation of the two missing channels at each site.
ImageRGB bayer_demosaic(const ImagePlane& raw);

/// In-place shot noise on a raw plane.
void apply_shot_noise(ImagePlane& raw, double photon_scale, core::SeededRng& rng);

/// inverse CRF, mosaic, shot noise, additive Gaussian, demosaic, clamp,
/// forward CRF.
ImageRGB gaussian_poisson_noise(const ImageRGB& img, const NoiseParams& params, core::SeededRng& rng);

struct HazeParams {
  double beta = 0.0;
  double A = 1.0;
  /// Haze center in normalized [0,1] coordinates (x, y).
  double cx = 0.5;
  double cy = 0.5;
};

/// A ~ U[0.7, 1], center uniform, beta set so the farthest pixel keeps a
/// transmission in [0.2, 0.7].
HazeParams sample_haze(core::SeededRng& rng, int height, int width);

/// Distance of pixel (y, x) from the haze center, divided by the diagonal.
double haze_distance(const HazeParams& params, int y, int x, int height, int width);

ImageRGB synthesize_haze(const ImageRGB& img, const HazeParams& params);

/// Smoothed low-frequency value noise in [0, 1].
ImagePlane value_noise_mask(core::SeededRng& rng, int height, int width);

/// img * (1 - mask) + A * mask.
ImageRGB apply_haze_mask(const ImageRGB& img, const ImagePlane& mask, double A);

enum class Attribute { Normal, LowLight, Fog };
std::string to_string(Attribute a);
Attribute parse_attribute(const std::string& s);

/// Applies the degradation for `attr`: none, low light followed by sensor
/// noise, or haze (scattering model or mask, each with probability 1/2).
ImageRGB degrade_optical(const ImageRGB& img, Attribute attr, core::SeededRng& rng);

enum class DegradeMode { BI, BD };
std::string to_string(DegradeMode m);
DegradeMode parse_mode(const std::string& s);

inline constexpr int kBlurTaps = 7;
inline constexpr double kBlurSigma = 1.6;

/// BI: bicubic 1/scale. BD: 7x7 Gaussian (sigma 1.6), then bicubic 1/scale.
ImagePlane degrade_thermal(const ImagePlane& hr, int scale, DegradeMode mode);

struct ToyPair {
  ImageRGB optical;
  ImagePlane thermal;
};

/// Procedural aligned optical/thermal scene: gradient background with
/// rectangles and disks. Dimensions must be multiples of 8.
ToyPair generate_toy_pair(core::SeededRng& rng, int height, int width);

}  // namespace gdnet::imaging
