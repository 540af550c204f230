#include "orchard/features.hpp"

#include <cmath>

#include "orchard/error.hpp"

namespace orchard {
namespace {

struct BoundingBox {
  int x0, y0, x1, y1;  // inclusive
  bool empty;
};

BoundingBox nonzero_bounds(const GrayImage& img) {
  BoundingBox b{img.width(), img.height(), -1, -1, true};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (img.at(x, y) != 0.0) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
        b.empty = false;
      }
    }
  }
  return b;
}

void check_order(int p, int q) {
  if (p < 0 || q < 0)
    throw Error(ErrorKind::kInvalidArgument, "moment orders must be non-negative");
}

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

}  // namespace

MomentSet compute_moments(const GrayImage& img) {
  MomentSet ms;
  const BoundingBox box = nonzero_bounds(img);
  if (box.empty)
    throw Error(ErrorKind::kDegenerateInput, "moments of a zero-mass image");

  // Raw moments in image coordinates: per-row sums of x^p f, then weighted by
  // y^q.
  for (int y = box.y0; y <= box.y1; ++y) {
    double row[4] = {};
    for (int x = box.x0; x <= box.x1; ++x) {
      const double f = img.at(x, y);
      if (f == 0.0) continue;
      const double xd = x;
      row[0] += f;
      row[1] += xd * f;
      row[2] += xd * xd * f;
      row[3] += xd * xd * xd * f;
    }
    const double yd = y;
    const double ypow[4] = {1.0, yd, yd * yd, yd * yd * yd};
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; p + q <= 3; ++q) ms.m[p][q] += row[p] * ypow[q];
  }
  if (!(ms.m[0][0] > 0.0))
    throw Error(ErrorKind::kDegenerateInput, "moments need positive total mass");

  // Centroid and central sums relative to the bounding-box origin.
  double m00 = 0.0, mx = 0.0, my = 0.0;
  for (int y = box.y0; y <= box.y1; ++y) {
    double rm = 0.0, rx = 0.0;
    for (int x = box.x0; x <= box.x1; ++x) {
      const double f = img.at(x, y);
      rm += f;
      rx += static_cast<double>(x - box.x0) * f;
    }
    m00 += rm;
    mx += rx;
    my += static_cast<double>(y - box.y0) * rm;
  }
  const double u_bar = mx / m00;
  const double v_bar = my / m00;
  ms.x_bar = box.x0 + u_bar;
  ms.y_bar = box.y0 + v_bar;

  double c[4][4] = {};
  for (int y = box.y0; y <= box.y1; ++y) {
    double row[4] = {};
    for (int x = box.x0; x <= box.x1; ++x) {
      const double f = img.at(x, y);
      if (f == 0.0) continue;
      const double dx = static_cast<double>(x - box.x0) - u_bar;
      row[0] += f;
      row[1] += dx * f;
      row[2] += dx * dx * f;
      row[3] += dx * dx * dx * f;
    }
    const double dy = static_cast<double>(y - box.y0) - v_bar;
    const double dpow[4] = {1.0, dy, dy * dy, dy * dy * dy};
    for (int p = 0; p <= 3; ++p)
      for (int q = 0; p + q <= 3; ++q)
        if (p + q >= 2) c[p][q] += row[p] * dpow[q];
  }

  ms.mu[0][0] = ms.m[0][0];
  ms.mu[1][0] = 0.0;
  ms.mu[0][1] = 0.0;
  for (int p = 0; p <= 3; ++p) {
    for (int q = 0; p + q <= 3; ++q) {
      if (p + q < 2) continue;
      ms.mu[p][q] = c[p][q];
      const double gamma = (p + q) / 2.0 + 1.0;
      ms.eta[p][q] = c[p][q] / std::pow(m00, gamma);
    }
  }
  return ms;
}

double raw_moment(const GrayImage& img, int p, int q) {
  check_order(p, q);
  double sum = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    double row = 0.0;
    for (int x = 0; x < img.width(); ++x) {
      const double f = img.at(x, y);
      if (f != 0.0) row += ipow(x, p) * f;
    }
    sum += row * ipow(y, q);
  }
  return sum;
}

double central_moment(const GrayImage& img, int p, int q) {
  check_order(p, q);
  const MomentSet ms = compute_moments(img);
  if (p + q <= 3) return ms.mu[p][q];
  double sum = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    double row = 0.0;
    for (int x = 0; x < img.width(); ++x) {
      const double f = img.at(x, y);
      if (f != 0.0) row += ipow(x - ms.x_bar, p) * f;
    }
    sum += row * ipow(y - ms.y_bar, q);
  }
  return sum;
}

double normalized_central_moment(const GrayImage& img, int p, int q) {
  check_order(p, q);
  if (p + q < 2)
    throw Error(ErrorKind::kInvalidArgument,
                "normalized central moments are defined for p + q >= 2");
  if (p + q <= 3) return compute_moments(img).eta[p][q];
  const double m00 = compute_moments(img).m[0][0];
  return central_moment(img, p, q) / std::pow(m00, (p + q) / 2.0 + 1.0);
}

HuInvariants hu_invariants(const MomentSet& ms) {
  const double n20 = ms.eta[2][0], n02 = ms.eta[0][2], n11 = ms.eta[1][1];
  const double n30 = ms.eta[3][0], n03 = ms.eta[0][3];
  const double n21 = ms.eta[2][1], n12 = ms.eta[1][2];

  const double a = n30 + n12;  // recurring sums
  const double b = n21 + n03;
  const double s = n30 - 3.0 * n12;
  const double t = 3.0 * n21 - n03;

  HuInvariants phi{};
  phi[0] = n20 + n02;
  phi[1] = (n20 - n02) * (n20 - n02) + 4.0 * n11 * n11;
  phi[2] = s * s + t * t;
  phi[3] = a * a + b * b;
  phi[4] = s * a * (a * a - 3.0 * b * b) + t * b * (3.0 * a * a - b * b);
  phi[5] = (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b;
  phi[6] = t * a * (a * a - 3.0 * b * b) - s * b * (3.0 * a * a - b * b);
  return phi;
}

HuInvariants hu_invariants(const GrayImage& img) {
  return hu_invariants(compute_moments(img));
}

std::array<int, 3> feature_indices(ClassLabel label) {
  switch (label) {
    case ClassLabel::kApple: return {2, 0, 1};
    case ClassLabel::kLeaves: return {0, 3, 2};
    case ClassLabel::kSky: return {4, 2, 3};
    case ClassLabel::kTrunkBranches: break;
  }
  throw Error(ErrorKind::kInvalidArgument, "trunk class has no invariant descriptor");
}

FeatureVector class_feature_vector(const ClassMap& map, ClassLabel label) {
  FeatureVector fv;
  fv.label = label;
  if (label == ClassLabel::kTrunkBranches) {
    fv.empty = std::find(map.values().begin(), map.values().end(), label) == map.values().end();
    return fv;
  }

  GrayImage f(map.width(), map.height());
  const double code = gray_code(label);
  bool any = false;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] == label) {
      f[i] = code;
      any = true;
    }
  }
  if (!any) {
    fv.empty = true;
    return fv;
  }
  const HuInvariants phi = hu_invariants(f);
  const auto idx = feature_indices(label);
  for (int k = 0; k < 3; ++k) fv.values[k] = phi[idx[k]];
  return fv;
}

std::array<FeatureVector, 4> extract_all(const ClassMap& map) {
  std::array<FeatureVector, 4> out;
  for (std::size_t i = 0; i < kAllClasses.size(); ++i)
    out[i] = class_feature_vector(map, kAllClasses[i]);
  return out;
}

}  // namespace orchard
