#include "orchard/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "orchard/error.hpp"

namespace orchard {
namespace {

int bin_of(double v, int bins) {
  const int b = static_cast<int>(std::floor(v * bins / 256.0));
  return std::clamp(b, 0, bins - 1);
}

// Maps each of the 256 gray bins to 255 * CDF(bin).
std::array<double, 256> equalization_lut(const std::vector<std::uint64_t>& hist,
                                         std::uint64_t total) {
  std::array<double, 256> lut{};
  std::uint64_t acc = 0;
  for (int b = 0; b < 256; ++b) {
    acc += hist[b];
    lut[b] = 255.0 * static_cast<double>(acc) / static_cast<double>(total);
  }
  return lut;
}

void blur_rows(const GrayImage& src, GrayImage& dst, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const int w = src.width();
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      const double c = src.at(x, y);
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += k[i + r] * (src.at(std::clamp(x + i, 0, w - 1), y) - c);
      dst.at(x, y) = c + acc;
    }
  }
}

void blur_cols(const GrayImage& src, GrayImage& dst, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const int h = src.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const double c = src.at(x, y);
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += k[i + r] * (src.at(x, std::clamp(y + i, 0, h - 1)) - c);
      dst.at(x, y) = c + acc;
    }
  }
}

}  // namespace

std::vector<std::uint64_t> histogram(const GrayImage& img, int bins) {
  if (bins < 2) throw Error(ErrorKind::kInvalidArgument, "histogram needs >= 2 bins");
  std::vector<std::uint64_t> counts(bins, 0);
  for (double v : img.values()) ++counts[bin_of(v, bins)];
  return counts;
}

GrayImage hist_equalize(const GrayImage& img) {
  const auto lut = equalization_lut(histogram(img, 256), img.size());
  GrayImage out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = lut[bin_of(img[i], 256)];
  return out;
}

RgbImage hist_equalize(const RgbImage& img) {
  RgbImage out = img;
  auto bytes = out.bytes();
  for (int c = 0; c < 3; ++c) {
    std::vector<std::uint64_t> hist(256, 0);
    for (std::size_t i = c; i < bytes.size(); i += 3) ++hist[bytes[i]];
    const auto lut = equalization_lut(hist, img.pixel_count());
    for (std::size_t i = c; i < bytes.size(); i += 3)
      bytes[i] = static_cast<std::uint8_t>(std::lround(lut[bytes[i]]));
  }
  return out;
}

bool should_equalize(const GrayImage& img, double mean_threshold) {
  double sum = 0.0;
  for (double v : img.values()) sum += v;
  return sum / static_cast<double>(img.size()) < mean_threshold;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error(ErrorKind::kInvalidArgument, "blur sigma must be positive");
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + r];
  }
  for (double& v : k) v /= sum;
  return k;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma, int passes) {
  if (passes < 1) throw Error(ErrorKind::kInvalidArgument, "blur passes must be >= 1");
  const auto k = gaussian_kernel(sigma);
  GrayImage cur = img;
  GrayImage tmp(img.width(), img.height());
  for (int p = 0; p < passes; ++p) {
    // Weighted deviations from the center keep constants exact; the clamp
    // absorbs last-ulp overshoot so each pass stays inside its input range.
    const auto [lo, hi] = std::minmax_element(cur.values().begin(), cur.values().end());
    const double vmin = *lo, vmax = *hi;
    blur_rows(cur, tmp, k);
    blur_cols(tmp, cur, k);
    for (double& v : cur.values()) v = std::clamp(v, vmin, vmax);
  }
  return cur;
}

}  // namespace orchard
