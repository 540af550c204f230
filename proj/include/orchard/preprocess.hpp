#pragma once

#include <cstdint>
#include <vector>

#include "orchard/image.hpp"

namespace orchard {

/// Counts per bin; bin b covers [b*256/bins, (b+1)*256/bins). Values outside
/// [0, 256) land in the first or last bin.
std::vector<std::uint64_t> histogram(const GrayImage& img, int bins = 256);

/// CDF remap s = 255 * CDF(r) over the 256-bin histogram. Monotone; a
/// constant image maps to 255 everywhere.
GrayImage hist_equalize(const GrayImage& img);

/// Equalizes R, G and B independently.
RgbImage hist_equalize(const RgbImage& img);

/// True iff the mean intensity is strictly below `mean_threshold`.
bool should_equalize(const GrayImage& img, double mean_threshold = 85.0);

/// Normalized 1-D Gaussian kernel of radius ceil(3*sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian low-pass: horizontal then vertical, clamp-to-edge,
/// repeated `passes` times.
GrayImage gaussian_blur(const GrayImage& img, double sigma = 1.0, int passes = 1);

}  // namespace orchard
