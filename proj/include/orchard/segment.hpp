#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "orchard/image.hpp"

namespace orchard {

enum class SkyMode { kBlueSky, kCloudySky };
enum class Variety { kRedDelicious, kGoldenDelicious };
enum class EqualizeMode { kAuto, kOn, kOff };

const char* to_string(SkyMode mode);
const char* to_string(Variety variety);
const char* to_string(EqualizeMode mode);
SkyMode parse_sky_mode(const std::string& s);     // "blue" | "cloudy"
Variety parse_variety(const std::string& s);      // "red" | "golden"
EqualizeMode parse_equalize(const std::string& s);  // "auto" | "on" | "off"

/// Pixelwise max(minuend - subtrahend, 0) in double precision.
GrayImage color_difference(const RgbImage& img, Channel minuend, Channel subtrahend);

/// 255 - v, pixelwise.
GrayImage complement(const GrayImage& img);

/// Integer t in [0, 255] maximizing the between-class variance over the
/// 256-bin histogram, class 0 = bins <= t. Ties resolve to the smallest t.
/// Throws kDegenerateInput when fewer than two bins are occupied.
int otsu_threshold(const GrayImage& img);

/// mask = img > t.
BinaryMask binarize(const GrayImage& img, double t);

struct BlurSettings {
  double sigma = 1.0;
  int passes = 2;      // class-difference images
  int sky_passes = 1;  // sky-path images
};

/// Result of one class extraction: the mask and the threshold that made it.
struct Extraction {
  BinaryMask mask;
  int threshold = 0;
};

Extraction extract_apples(const RgbImage& img, Variety variety, const BlurSettings& blur = {});
Extraction extract_leaves(const RgbImage& img, const BlurSettings& blur = {});
Extraction extract_sky(const RgbImage& img, SkyMode mode, const BlurSettings& blur = {});

/// NOT(apples | leaves | sky).
BinaryMask extract_trunk(const BinaryMask& apples, const BinaryMask& leaves,
                         const BinaryMask& sky);

/// Overlays the masks with precedence Apple > Leaves > Sky; uncovered pixels
/// become TrunkBranches.
ClassMap compose(const BinaryMask& apples, const BinaryMask& leaves, const BinaryMask& sky);

BinaryMask class_mask(const ClassMap& map, ClassLabel label);

struct SegmentOptions {
  Variety variety = Variety::kRedDelicious;
  SkyMode sky = SkyMode::kBlueSky;
  EqualizeMode equalize = EqualizeMode::kAuto;
  double equalize_mean_threshold = 85.0;
  BlurSettings blur;
};

struct Segmentation {
  ClassMap map;
  Extraction apples;
  Extraction leaves;
  Extraction sky;
  BinaryMask trunk;
  bool equalized = false;
  std::vector<std::string> warnings;

  const BinaryMask& mask(ClassLabel label) const;
};

/// Masks below this density are reported as likely-absent classes.
inline constexpr double kLowDensityWarning = 0.02;

/// Optional equalization, the three color-difference extractions, then
/// composition. Errors carry the failing stage in their message.
Segmentation segment_scene(const RgbImage& img, const SegmentOptions& opts);

}  // namespace orchard
