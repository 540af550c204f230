#include "orchard/segment.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>

#include "orchard/error.hpp"
#include "orchard/preprocess.hpp"

namespace orchard {

const char* to_string(SkyMode mode) {
  return mode == SkyMode::kBlueSky ? "blue" : "cloudy";
}

const char* to_string(Variety variety) {
  return variety == Variety::kRedDelicious ? "red" : "golden";
}

const char* to_string(EqualizeMode mode) {
  switch (mode) {
    case EqualizeMode::kAuto: return "auto";
    case EqualizeMode::kOn: return "on";
    case EqualizeMode::kOff: return "off";
  }
  return "?";
}

SkyMode parse_sky_mode(const std::string& s) {
  if (s == "blue") return SkyMode::kBlueSky;
  if (s == "cloudy") return SkyMode::kCloudySky;
  throw Error(ErrorKind::kInvalidArgument, "sky mode must be blue or cloudy, got '" + s + "'");
}

Variety parse_variety(const std::string& s) {
  if (s == "red") return Variety::kRedDelicious;
  if (s == "golden") return Variety::kGoldenDelicious;
  throw Error(ErrorKind::kInvalidArgument, "variety must be red or golden, got '" + s + "'");
}

EqualizeMode parse_equalize(const std::string& s) {
  if (s == "auto") return EqualizeMode::kAuto;
  if (s == "on") return EqualizeMode::kOn;
  if (s == "off") return EqualizeMode::kOff;
  throw Error(ErrorKind::kInvalidArgument, "equalize must be auto, on or off, got '" + s + "'");
}

GrayImage color_difference(const RgbImage& img, Channel minuend, Channel subtrahend) {
  if (minuend == subtrahend)
    throw Error(ErrorKind::kInvalidArgument, "color difference of a channel with itself");
  GrayImage out(img.width(), img.height());
  const auto src = img.bytes();
  const auto a = static_cast<std::size_t>(minuend);
  const auto b = static_cast<std::size_t>(subtrahend);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = static_cast<double>(src[3 * i + a]) - static_cast<double>(src[3 * i + b]);
    out[i] = d > 0.0 ? d : 0.0;
  }
  return out;
}

GrayImage complement(const GrayImage& img) {
  GrayImage out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = 255.0 - img[i];
  return out;
}

int otsu_threshold(const GrayImage& img) {
  const auto hist = histogram(img, 256);
  const auto occupied = std::count_if(hist.begin(), hist.end(),
                                      [](std::uint64_t c) { return c > 0; });
  if (occupied < 2)
    throw Error(ErrorKind::kDegenerateInput,
                "otsu: image has a single gray level, no valid split");

  // Exact integer prefix sums; score = (s0*N - S*n0)^2 / (n0*n1), which is
  // N^2 times w0*w1*(mu0 - mu1)^2.
  std::int64_t total = 0;
  std::int64_t total_sum = 0;
  for (int b = 0; b < 256; ++b) {
    total += static_cast<std::int64_t>(hist[b]);
    total_sum += static_cast<std::int64_t>(hist[b]) * b;
  }
  std::int64_t n0 = 0;
  std::int64_t s0 = 0;
  int best_t = 0;
  double best = -1.0;
  for (int t = 0; t < 256; ++t) {
    n0 += static_cast<std::int64_t>(hist[t]);
    s0 += static_cast<std::int64_t>(hist[t]) * t;
    const std::int64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double diff = static_cast<double>(s0 * total - total_sum * n0);
    const double score = diff * diff / (static_cast<double>(n0) * static_cast<double>(n1));
    if (score > best) {
      best = score;
      best_t = t;
    }
  }
  return best_t;
}

BinaryMask binarize(const GrayImage& img, double t) {
  BinaryMask mask(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) mask[i] = img[i] > t ? 1 : 0;
  return mask;
}

namespace {

Extraction threshold_image(const GrayImage& smoothed) {
  Extraction e;
  e.threshold = otsu_threshold(smoothed);
  e.mask = binarize(smoothed, e.threshold);
  return e;
}

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const BinaryMask& c) {
  if (!a.same_shape(b) || !a.same_shape(c))
    throw Error(ErrorKind::kDimensionMismatch, "class masks differ in size");
}

}  // namespace

Extraction extract_apples(const RgbImage& img, Variety variety, const BlurSettings& blur) {
  const Channel sub = variety == Variety::kRedDelicious ? Channel::kGreen : Channel::kBlue;
  return threshold_image(
      gaussian_blur(color_difference(img, Channel::kRed, sub), blur.sigma, blur.passes));
}

Extraction extract_leaves(const RgbImage& img, const BlurSettings& blur) {
  return threshold_image(gaussian_blur(
      color_difference(img, Channel::kGreen, Channel::kBlue), blur.sigma, blur.passes));
}

Extraction extract_sky(const RgbImage& img, SkyMode mode, const BlurSettings& blur) {
  GrayImage diff = mode == SkyMode::kBlueSky
                       ? color_difference(img, Channel::kBlue, Channel::kRed)
                       : complement(color_difference(img, Channel::kRed, Channel::kGreen));
  return threshold_image(gaussian_blur(diff, blur.sigma, blur.sky_passes));
}

BinaryMask extract_trunk(const BinaryMask& apples, const BinaryMask& leaves,
                         const BinaryMask& sky) {
  require_same_shape(apples, leaves, sky);
  BinaryMask out(apples.width(), apples.height());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (apples[i] || leaves[i] || sky[i]) ? 0 : 1;
  return out;
}

ClassMap compose(const BinaryMask& apples, const BinaryMask& leaves, const BinaryMask& sky) {
  require_same_shape(apples, leaves, sky);
  ClassMap map(apples.width(), apples.height(), ClassLabel::kTrunkBranches);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (apples[i]) map[i] = ClassLabel::kApple;
    else if (leaves[i]) map[i] = ClassLabel::kLeaves;
    else if (sky[i]) map[i] = ClassLabel::kSky;
  }
  return map;
}

BinaryMask class_mask(const ClassMap& map, ClassLabel label) {
  BinaryMask m(map.width(), map.height());
  for (std::size_t i = 0; i < map.size(); ++i) m[i] = map[i] == label ? 1 : 0;
  return m;
}

const BinaryMask& Segmentation::mask(ClassLabel label) const {
  switch (label) {
    case ClassLabel::kApple: return apples.mask;
    case ClassLabel::kLeaves: return leaves.mask;
    case ClassLabel::kSky: return sky.mask;
    case ClassLabel::kTrunkBranches: return trunk;
  }
  return trunk;
}

Segmentation segment_scene(const RgbImage& input, const SegmentOptions& opts) {
  Segmentation seg;
  seg.equalized = opts.equalize == EqualizeMode::kOn ||
                  (opts.equalize == EqualizeMode::kAuto &&
                   should_equalize(to_gray(input), opts.equalize_mean_threshold));
  const RgbImage img = seg.equalized ? hist_equalize(input) : input;

  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(name) + ": " + e.what());
    }
  };
  seg.apples = stage("apples", [&] { return extract_apples(img, opts.variety, opts.blur); });
  seg.leaves = stage("leaves", [&] { return extract_leaves(img, opts.blur); });
  seg.sky = stage("sky", [&] { return extract_sky(img, opts.sky, opts.blur); });
  seg.trunk = extract_trunk(seg.apples.mask, seg.leaves.mask, seg.sky.mask);
  seg.map = compose(seg.apples.mask, seg.leaves.mask, seg.sky.mask);

  for (ClassLabel c : {ClassLabel::kApple, ClassLabel::kLeaves, ClassLabel::kSky}) {
    const double d = density(seg.mask(c));
    if (d < kLowDensityWarning) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%s mask density %.4f below %.2f; class may be absent",
                    class_name(c), d, kLowDensityWarning);
      seg.warnings.emplace_back(buf);
    }
  }
  return seg;
}

}  // namespace orchard
