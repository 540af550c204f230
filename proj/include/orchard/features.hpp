#pragma once

#include <array>
#include <string>
#include <vector>

#include "orchard/image.hpp"

namespace orchard {

/// Raw moments up to order 3, centroid, and central / normalized central
/// moments of orders 2 and 3. Coordinates: x = column, y = row, origin at
/// the top-left pixel.
struct MomentSet {
  double m[4][4] = {};   // m[p][q], p + q <= 3
  double x_bar = 0.0;
  double y_bar = 0.0;
  double mu[4][4] = {};  // mu[p][q]; mu00 = m00, mu10 = mu01 = 0
  double eta[4][4] = {}; // eta[p][q] for p + q in {2, 3}
};

/// Streams the image once per row. Central sums are accumulated in
/// coordinates local to the bounding box of non-zero pixels, so integer
/// translations of a pattern produce bit-identical central moments.
/// Throws kDegenerateInput when m00 is not positive.
MomentSet compute_moments(const GrayImage& img);

double raw_moment(const GrayImage& img, int p, int q);
/// Orders above 3 fall back to a direct double loop around the centroid.
double central_moment(const GrayImage& img, int p, int q);
/// mu_pq / mu00^gamma, gamma = (p + q) / 2 + 1; requires p + q >= 2.
double normalized_central_moment(const GrayImage& img, int p, int q);

using HuInvariants = std::array<double, 7>;  // phi1..phi7 at [0..6]

HuInvariants hu_invariants(const MomentSet& m);
HuInvariants hu_invariants(const GrayImage& img);

struct FeatureVector {
  ClassLabel label = ClassLabel::kApple;
  std::array<double, 3> values{};
  bool empty = false;  // class had no pixels
};

/// Indices (0-based) of the invariants forming each class's descriptor:
/// Apple [phi3, phi1, phi2], Leaves [phi1, phi4, phi3], Sky [phi5, phi3, phi4].
std::array<int, 3> feature_indices(ClassLabel label);

/// Moments of the class pixels rendered with the class gray code over a zero
/// background. TrunkBranches is always [0, 0, 0]; an absent class yields
/// [0, 0, 0] with `empty` set.
FeatureVector class_feature_vector(const ClassMap& map, ClassLabel label);

/// Vectors for all four classes in canonical order.
std::array<FeatureVector, 4> extract_all(const ClassMap& map);

}  // namespace orchard
