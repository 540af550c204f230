#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orchard/image.hpp"
#include "orchard/segment.hpp"

namespace orchard {

enum class Brightness { kBright, kDark };

const char* to_string(Brightness b);

struct SceneSpec {
  int width = 512;
  int height = 384;
  Variety variety = Variety::kRedDelicious;
  SkyMode sky = SkyMode::kBlueSky;
  Brightness brightness = Brightness::kBright;
  int apple_count = 5;
  bool glare = false;
  double sky_fraction = 0.35;  // fraction of frame height above the horizon
  double noise_sigma = 5.0;    // gray levels, per channel
  std::uint64_t seed = 1;

  void validate() const;
};

/// Camera looking up into the canopy: sky fills most of the frame.
SceneSpec bottom_up_preset(SceneSpec base);

struct AppleGeometry {
  double cx = 0, cy = 0, radius = 0;
  bool glare = false;
  double glare_cx = 0, glare_cy = 0, glare_radius = 0;
};

struct LabeledScene {
  RgbImage image;        // final render with noise
  RgbImage clean;        // same render before noise
  ClassMap truth;        // topmost painted object per pixel
  BinaryMask glare;      // pixels painted by glare highlights
  SceneSpec spec;
  std::vector<AppleGeometry> apples;
};

/// Color calibration constants, one table so they can be retuned.
struct Palette {
  // Blue sky: B in [200,240], R in [70,110], G in [110,150].
  int sky_b_lo = 200, sky_b_hi = 240, sky_r_lo = 70, sky_r_hi = 110, sky_g_lo = 110, sky_g_hi = 150;
  // Cloudy sky: all channels in [240,255], blue highest.
  int cloud_lo = 240, cloud_hi = 248, cloud_blue_lift_lo = 3, cloud_blue_lift_hi = 7;
  // Trunk gray (90,85,80), reddish branches (120,70,60), common jitter.
  int trunk_r = 90, trunk_g = 85, trunk_b = 80;
  int branch_r = 120, branch_g = 70, branch_b = 60;
  int bark_jitter = 10;
  // Leaves: G in [120,200], R = G - [40,80], B = G - [60,110].
  int leaf_g_lo = 120, leaf_g_hi = 200, leaf_r_off_lo = 40, leaf_r_off_hi = 80,
      leaf_b_off_lo = 60, leaf_b_off_hi = 110, leaf_rb_spread = 20;
  // Red Delicious: R in [160,230], G = R - [90,140], B = G +- 10.
  int red_r_lo = 160, red_r_hi = 230, red_g_off_lo = 90, red_g_off_hi = 140, red_b_spread = 10;
  // Golden Delicious: R ~ G in [180,230], B = R - [80,130].
  int gold_lo = 180, gold_hi = 230, gold_g_spread = 8, gold_b_off_lo = 80, gold_b_off_hi = 130;
  // Sun glare: bright highlight where B climbs to within 10 of R.
  int glare_r_lo = 238, glare_r_hi = 250, glare_g_off_lo = 10, glare_g_off_hi = 25,
      glare_b_off_hi = 8;
  double dark_scale = 0.33;
};

LabeledScene gen_scene(const SceneSpec& spec, const Palette& palette = {});

enum class VarietyMix { kRed, kGolden, kAlternate };
enum class SkyMix { kBlue, kCloudy, kAlternate };

/// Per-scene jitter applied by gen_dataset on top of the base spec.
struct DatasetOptions {
  SceneSpec base;
  VarietyMix varieties = VarietyMix::kAlternate;
  SkyMix skies = SkyMix::kBlue;
  int min_apples = 3;
  int max_apples = 8;
  double dark_fraction = 0.0;
  double glare_probability = 0.0;
  double sky_fraction_jitter = 0.08;
  bool bottom_up = false;
};

/// Spec of scene `index` as gen_dataset would render it.
SceneSpec dataset_scene_spec(const DatasetOptions& opts, int index, std::uint64_t seed);

struct ManifestEntry {
  int index = 0;
  std::string image;  // file names relative to the dataset directory
  std::string truth;
  std::string meta;
  SceneSpec spec;
};

/// Writes NNNN.ppm, NNNN.truth.pgm, NNNN.meta.json per scene and
/// manifest.csv. Scenes are rendered on up to `threads` workers.
std::vector<ManifestEntry> gen_dataset(int n, const DatasetOptions& opts, std::uint64_t seed,
                                       const std::string& out_dir, int threads = 1);

std::vector<ManifestEntry> read_manifest(const std::string& dir);

}  // namespace orchard
