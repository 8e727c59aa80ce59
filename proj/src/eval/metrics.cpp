#include "gdnet/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gdnet/core/error.hpp"

namespace gdnet::eval {

namespace {

void check_same(const imaging::ImagePlane& a, const imaging::ImagePlane& b, const char* op) {
  if (a.height != b.height || a.width != b.width)
    throw ContractError(std::string(op) + ": image sizes " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                        " and " + std::to_string(b.height) + "x" + std::to_string(b.width) + " differ");
}

// Valid-region separable filtering with a normalised 1-D kernel.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int oh = h - n + 1, ow = w - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int i = 0; i < n; ++i) acc += k[static_cast<std::size_t>(i)] * img[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int i = 0; i < n; ++i) acc += k[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double mse(const imaging::ImagePlane& a, const imaging::ImagePlane& b) {
  check_same(a, b, "mse");
  if (a.data.empty()) throw ContractError("mse: empty images");
  double total = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    total += d * d;
  }
  return total / static_cast<double>(a.data.size());
}

double psnr(const imaging::ImagePlane& a, const imaging::ImagePlane& b) {
  const double m = mse(a, b);
  if (m == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

double ssim(const imaging::ImagePlane& a, const imaging::ImagePlane& b) {
  check_same(a, b, "ssim");
  if (a.height < kSsimWindow || a.width < kSsimWindow)
    throw ContractError("ssim: images must be at least " + std::to_string(kSsimWindow) + "x" +
                        std::to_string(kSsimWindow));
  std::vector<double> k(kSsimWindow);
  double total = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    total += k[static_cast<std::size_t>(i)];
  }
  for (auto& v : k) v /= total;
  const int h = a.height, w = a.width;
  const std::size_t n = a.data.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a.data[i];
    y[i] = b.data[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, h, w, k), my = filter_valid(y, h, w, k);
  const auto sxx = filter_valid(xx, h, w, k), syy = filter_valid(yy, h, w, k), sxy = filter_valid(xy, h, w, k);
  const double c1 = kSsimK1 * kSsimK1, c2 = kSsimK2 * kSsimK2;
  double acc = 0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
    acc += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return acc / static_cast<double>(mx.size());
}

}  // namespace gdnet::eval
