#pragma once

#include "gdnet/imaging/image.hpp"

namespace gdnet::eval {

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

double mse(const imaging::ImagePlane& a, const imaging::ImagePlane& b);
/// 10 log10(1 / MSE) for unit dynamic range, capped at 99 dB.
double psnr(const imaging::ImagePlane& a, const imaging::ImagePlane& b);
/// Mean of the local SSIM map over the valid region of an 11x11 Gaussian
/// window (sigma 1.5), K1 = 0.01, K2 = 0.03, L = 1.
double ssim(const imaging::ImagePlane& a, const imaging::ImagePlane& b);

}  // namespace gdnet::eval
