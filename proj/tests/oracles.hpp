#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance runner. Nothing here calls into the library's algorithms.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "orchard/image.hpp"

namespace oracle {

using orchard::GrayImage;

// Exhaustive Otsu on integer gray levels: score every t directly from class
// means and weights, keep the smallest maximizer.
inline int brute_force_otsu(const GrayImage& img) {
  std::array<double, 256> h{};
  for (double v : img.values()) h[static_cast<std::size_t>(std::lround(std::clamp(v, 0.0, 255.0)))] += 1;
  const double n = static_cast<double>(img.size());
  int best_t = -1;
  double best = -1.0;
  for (int t = 0; t < 255; ++t) {
    double w0 = 0, s0 = 0, w1 = 0, s1 = 0;
    for (int b = 0; b < 256; ++b) {
      const double c = h[static_cast<std::size_t>(b)];
      if (b <= t) {
        w0 += c;
        s0 += c * b;
      } else {
        w1 += c;
        s1 += c * b;
      }
    }
    if (w0 == 0 || w1 == 0) continue;
    const double d = s0 / w0 - s1 / w1;
    const double score = (w0 / n) * (w1 / n) * d * d;
    if (score > best * (1 + 1e-12)) {
      best = score;
      best_t = t;
    }
  }
  return best_t;
}

struct NaiveMoments {
  double m[4][4] = {};
  double mu[4][4] = {};
  double mu_abs[4][4] = {};  // sum of |terms|, the scale for relative checks
  double eta[4][4] = {};
};

inline NaiveMoments naive_moments(const GrayImage& img) {
  NaiveMoments n;
  for (int p = 0; p <= 3; ++p)
    for (int q = 0; p + q <= 3; ++q)
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) n.m[p][q] += std::pow(x, p) * std::pow(y, q) * img.at(x, y);
  const double xb = n.m[1][0] / n.m[0][0];
  const double yb = n.m[0][1] / n.m[0][0];
  for (int p = 0; p <= 3; ++p)
    for (int q = 0; p + q <= 3; ++q)
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
          const double t = std::pow(x - xb, p) * std::pow(y - yb, q) * img.at(x, y);
          n.mu[p][q] += t;
          n.mu_abs[p][q] += std::abs(t);
        }
  for (int p = 0; p <= 3; ++p)
    for (int q = 0; p + q <= 3; ++q)
      if (p + q >= 2) n.eta[p][q] = n.mu[p][q] / std::pow(n.m[0][0], (p + q) / 2.0 + 1.0);
  return n;
}

// Hu's seven invariants written out from the textbook formulas.
inline std::array<double, 7> naive_hu(const NaiveMoments& n) {
  const double n20 = n.eta[2][0], n02 = n.eta[0][2], n11 = n.eta[1][1];
  const double n30 = n.eta[3][0], n03 = n.eta[0][3], n21 = n.eta[2][1], n12 = n.eta[1][2];
  const double a = n30 + n12, b = n21 + n03;
  std::array<double, 7> h{};
  h[0] = n20 + n02;
  h[1] = (n20 - n02) * (n20 - n02) + 4 * n11 * n11;
  h[2] = (n30 - 3 * n12) * (n30 - 3 * n12) + (3 * n21 - n03) * (3 * n21 - n03);
  h[3] = a * a + b * b;
  h[4] = (n30 - 3 * n12) * a * (a * a - 3 * b * b) + (3 * n21 - n03) * b * (3 * a * a - b * b);
  h[5] = (n20 - n02) * (a * a - b * b) + 4 * n11 * a * b;
  h[6] = (3 * n21 - n03) * a * (a * a - 3 * b * b) - (n30 - 3 * n12) * b * (3 * a * a - b * b);
  return h;
}

inline bool close_rel(double a, double b, double rel, double scale = 0.0) {
  const double s = std::max({std::abs(a), std::abs(b), scale});
  return std::abs(a - b) <= rel * s;
}

inline GrayImage square(int canvas, int x0, int y0, int side, double value = 1.0) {
  GrayImage img(canvas, canvas);
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) img.at(x, y) = value;
  return img;
}

// Union of a few random rectangles: an asymmetric binary blob.
inline GrayImage random_pattern(std::mt19937_64& rng, int w, int h) {
  GrayImage img(w, h);
  std::uniform_int_distribution<int> side(3, std::min(w, h) / 2);
  for (int r = 0; r < 4; ++r) {
    const int rw = side(rng), rh = side(rng);
    const int x0 = std::uniform_int_distribution<int>(0, w - rw)(rng);
    const int y0 = std::uniform_int_distribution<int>(0, h - rh)(rng);
    for (int y = y0; y < y0 + rh; ++y)
      for (int x = x0; x < x0 + rw; ++x) img.at(x, y) = 1.0;
  }
  return img;
}

inline GrayImage rotate90(const GrayImage& in) {
  GrayImage out(in.height(), in.width());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) out.at(in.height() - 1 - y, x) = in.at(x, y);
  return out;
}

inline GrayImage mirror(const GrayImage& in) {
  GrayImage out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) out.at(in.width() - 1 - x, y) = in.at(x, y);
  return out;
}

inline GrayImage upsample(const GrayImage& in, int k) {
  GrayImage out(in.width() * k, in.height() * k);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = in.at(x / k, y / k);
  return out;
}

inline GrayImage shifted(const GrayImage& in, int dx, int dy, int canvas_w, int canvas_h) {
  GrayImage out(canvas_w, canvas_h);
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) out.at(x + dx, y + dy) = in.at(x, y);
  return out;
}

}  // namespace oracle
