#include "gdnet/imaging/degrade.hpp"

#include <algorithm>
#include <cmath>

#include "gdnet/core/error.hpp"

namespace gdnet::imaging {

LowLightParams sample_low_light(core::SeededRng& rng) {
  LowLightParams p;
  for (int c = 0; c < 3; ++c) {
    p.zeta[c] = rng.uniform(0.6, 0.9);
    p.eta[c] = rng.uniform(0.3, 0.5);
    p.theta[c] = rng.uniform(3.0, 5.0);
  }
  return p;
}

ImageRGB simulate_low_light(const ImageRGB& img, const LowLightParams& params) {
  for (double t : params.theta)
    if (!(t > 0)) throw ContractError("low light: theta must be positive, got " + std::to_string(t));
  ImageRGB out = img;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const std::size_t c = i % 3;
    const double v = params.eta[c] * std::pow(params.zeta[c] * img.data[i], params.theta[c]);
    out.data[i] = static_cast<float>(v);
  }
  clamp01(out);
  return out;
}

NoiseParams sample_noise(core::SeededRng& rng) {
  NoiseParams p;
  p.photon_scale = rng.uniform(500.0, 5000.0);
  p.sigma_g = rng.uniform(1e-3, 1e-2);
  return p;
}

double crf(double x, CrfDirection dir) { return std::pow(x, dir == CrfDirection::Inverse ? 2.2 : 1.0 / 2.2); }

ImageRGB crf(const ImageRGB& img, CrfDirection dir) {
  ImageRGB out = img;
  for (auto& v : out.data) v = static_cast<float>(crf(std::max(0.f, v), dir));
  return out;
}

namespace {

int bayer_color(int y, int x) { return (y & 1) + (x & 1); }  // 0 R, 1 G, 2 B

int mirror(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * n - 2 - i;
  return i;
}

void require_even(int h, int w) {
  if (h % 2 || w % 2)
    throw ContractError("bayer pattern needs even dims, got " + std::to_string(h) + "x" + std::to_string(w));
}

}  // namespace

ImagePlane bayer_mosaic(const ImageRGB& img) {
  require_even(img.height, img.width);
  ImagePlane raw(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) raw.at(y, x) = img.at(y, x, bayer_color(y, x));
  return raw;
}

ImageRGB bayer_demosaic(const ImagePlane& raw) {
  require_even(raw.height, raw.width);
  ImageRGB out(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x) {
      const int own = bayer_color(y, x);
      double sum[3] = {0, 0, 0};
      int count[3] = {0, 0, 0};
      // mirror without edge duplication keeps the mosaic parity at borders
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = mirror(y + dy, raw.height), xx = mirror(x + dx, raw.width);
          const int c = bayer_color(yy, xx);
          sum[c] += raw.at(yy, xx);
          ++count[c];
        }
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = c == own ? raw.at(y, x) : static_cast<float>(sum[c] / count[c]);
    }
  return out;
}

void apply_shot_noise(ImagePlane& raw, double photon_scale, core::SeededRng& rng) {
  if (!(photon_scale > 0)) throw ContractError("photon_scale must be positive");
  if (std::isinf(photon_scale)) return;
  for (auto& v : raw.data)
    v = static_cast<float>(static_cast<double>(rng.poisson(photon_scale * std::max(0.f, v))) / photon_scale);
}

ImageRGB gaussian_poisson_noise(const ImageRGB& img, const NoiseParams& params, core::SeededRng& rng) {
  if (params.sigma_g < 0) throw ContractError("sigma_g must be non-negative");
  ImagePlane raw = bayer_mosaic(crf(img, CrfDirection::Inverse));
  apply_shot_noise(raw, params.photon_scale, rng);
  if (params.sigma_g > 0)
    for (auto& v : raw.data) v = static_cast<float>(v + params.sigma_g * rng.normal());
  ImageRGB rgb = bayer_demosaic(raw);
  clamp01(rgb);
  return crf(rgb, CrfDirection::Forward);
}

double haze_distance(const HazeParams& params, int y, int x, int height, int width) {
  const double diag = std::hypot(static_cast<double>(height), static_cast<double>(width));
  const double px = x + 0.5, py = y + 0.5;
  return std::hypot(px - params.cx * width, py - params.cy * height) / diag;
}

HazeParams sample_haze(core::SeededRng& rng, int height, int width) {
  HazeParams p;
  p.A = rng.uniform(0.7, 1.0);
  p.cx = rng.uniform();
  p.cy = rng.uniform();
  double far = 0;
  for (int y : {0, height - 1})
    for (int x : {0, width - 1}) far = std::max(far, haze_distance(p, y, x, height, width));
  const double transmission = rng.uniform(0.2, 0.7);
  p.beta = far > 0 ? -std::log(transmission) / far : 0.0;
  return p;
}

ImageRGB synthesize_haze(const ImageRGB& img, const HazeParams& params) {
  if (params.beta < 0) throw ContractError("haze beta must be non-negative");
  ImageRGB out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double t = std::exp(-params.beta * haze_distance(params, y, x, img.height, img.width));
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = static_cast<float>(img.at(y, x, c) * t + params.A * (1.0 - t));
    }
  clamp01(out);
  return out;
}

ImagePlane value_noise_mask(core::SeededRng& rng, int height, int width) {
  const int cell = std::max(4, std::max(height, width) / 4);
  const int gh = height / cell + 2, gw = width / cell + 2;
  std::vector<double> grid(static_cast<std::size_t>(gh * gw));
  for (auto& g : grid) g = rng.uniform();
  const double density = rng.uniform(0.4, 0.8);
  auto smooth = [](double t) { return t * t * (3 - 2 * t); };
  ImagePlane mask(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double fy = static_cast<double>(y) / cell, fx = static_cast<double>(x) / cell;
      const int iy = static_cast<int>(fy), ix = static_cast<int>(fx);
      const double ty = smooth(fy - iy), tx = smooth(fx - ix);
      auto g = [&](int a, int b) { return grid[static_cast<std::size_t>(a * gw + b)]; };
      const double top = g(iy, ix) * (1 - tx) + g(iy, ix + 1) * tx;
      const double bot = g(iy + 1, ix) * (1 - tx) + g(iy + 1, ix + 1) * tx;
      mask.at(y, x) = static_cast<float>(density * (top * (1 - ty) + bot * ty));
    }
  return mask;
}

ImageRGB apply_haze_mask(const ImageRGB& img, const ImagePlane& mask, double A) {
  if (mask.height != img.height || mask.width != img.width)
    throw ContractError("haze mask " + std::to_string(mask.height) + "x" + std::to_string(mask.width) +
                        " does not match image " + std::to_string(img.height) + "x" + std::to_string(img.width));
  ImageRGB out = img;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double m = mask.data[i / 3];
    out.data[i] = static_cast<float>(img.data[i] * (1.0 - m) + A * m);
  }
  clamp01(out);
  return out;
}

std::string to_string(Attribute a) {
  switch (a) {
    case Attribute::Normal: return "normal";
    case Attribute::LowLight: return "lowlight";
    case Attribute::Fog: return "fog";
  }
  return "?";
}

Attribute parse_attribute(const std::string& s) {
  if (s == "normal") return Attribute::Normal;
  if (s == "lowlight") return Attribute::LowLight;
  if (s == "fog") return Attribute::Fog;
  throw ContractError("unknown attribute tag '" + s + "'");
}

ImageRGB degrade_optical(const ImageRGB& img, Attribute attr, core::SeededRng& rng) {
  switch (attr) {
    case Attribute::Normal: return img;
    case Attribute::LowLight: {
      const auto ll = sample_low_light(rng);
      const auto noise = sample_noise(rng);
      return gaussian_poisson_noise(simulate_low_light(img, ll), noise, rng);
    }
    case Attribute::Fog: {
      const auto haze = sample_haze(rng, img.height, img.width);
      if (rng.uniform() < 0.5) return apply_haze_mask(img, value_noise_mask(rng, img.height, img.width), haze.A);
      return synthesize_haze(img, haze);
    }
  }
  return img;
}

std::string to_string(DegradeMode m) { return m == DegradeMode::BI ? "BI" : "BD"; }

DegradeMode parse_mode(const std::string& s) {
  if (s == "BI") return DegradeMode::BI;
  if (s == "BD") return DegradeMode::BD;
  throw ContractError("unknown degradation mode '" + s + "'");
}

ImagePlane degrade_thermal(const ImagePlane& hr, int scale, DegradeMode mode) {
  if (scale < 1) throw ContractError("scale must be positive");
  if (hr.height % scale || hr.width % scale)
    throw ContractError("thermal " + std::to_string(hr.height) + "x" + std::to_string(hr.width) +
                        " not divisible by scale " + std::to_string(scale));
  ImagePlane src = mode == DegradeMode::BD ? gaussian_blur(hr, kBlurSigma, kBlurTaps / 2) : hr;
  ImagePlane lr = resize(src, 1.0 / scale);
  clamp01(lr);
  return lr;
}

ToyPair generate_toy_pair(core::SeededRng& rng, int height, int width) {
  if (height <= 0 || width <= 0 || height % 8 || width % 8)
    throw ContractError("toy scene dims must be positive multiples of 8");
  ImageRGB opt(height, width);
  double c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = rng.uniform(0.2, 0.8);
    c1[c] = rng.uniform(0.2, 0.8);
  }
  const double angle = rng.uniform(0.0, 6.283185307179586);
  const double ux = std::cos(angle), uy = std::sin(angle);
  const double span = std::abs(ux) * width + std::abs(uy) * height;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double t = ((x - width / 2.0) * ux + (y - height / 2.0) * uy) / span + 0.5;
      t = std::clamp(t, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) opt.at(y, x, c) = static_cast<float>(c0[c] * (1 - t) + c1[c] * t);
    }
  const int shapes = 4 + static_cast<int>(rng.below(7));
  const int minside = std::min(height, width);
  for (int s = 0; s < shapes; ++s) {
    const bool disk = rng.uniform() < 0.5;
    float color[3];
    for (auto& v : color) v = static_cast<float>(rng.uniform());
    const double cy = rng.uniform(0, height), cx = rng.uniform(0, width);
    const double ry = rng.uniform(0.05, 0.25) * minside, rx = disk ? ry : rng.uniform(0.05, 0.25) * minside;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double dy = (y + 0.5 - cy) / ry, dx = (x + 0.5 - cx) / rx;
        const bool inside = disk ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside)
          for (int c = 0; c < 3; ++c) opt.at(y, x, c) = color[c];
      }
  }
  // warm objects read dark in the visible band
  ImagePlane thermal = luminance(opt);
  for (auto& v : thermal.data) v = 0.1f + 0.8f * (1.0f - v);
  thermal = gaussian_blur(thermal, 0.8, 2);
  clamp01(thermal);
  return {std::move(opt), std::move(thermal)};
}

}  // namespace gdnet::imaging
