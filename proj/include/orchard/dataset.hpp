#pragma once

#include <array>
#include <string>
#include <vector>

#include "orchard/features.hpp"
#include "orchard/metrics.hpp"
#include "orchard/mlp.hpp"
#include "orchard/segment.hpp"
#include "orchard/synthgen.hpp"

namespace orchard {

/// One row of the feature CSV: a class descriptor of one image.
struct FeatureRow {
  int image_id = 0;
  ClassLabel label = ClassLabel::kApple;
  std::array<double, 3> values{};
  bool empty = false;
  int target = 0;  // 1 for the apple class, 0 otherwise
};

enum class FeatureSource { kSegmented, kTruth };

const char* to_string(FeatureSource s);
FeatureSource parse_feature_source(const std::string& s);  // "segmented" | "truth"

/// Four rows in class order for one class map.
std::array<FeatureRow, 4> feature_rows(const ClassMap& map, int image_id);

/// Segmentation options matching how a manifest scene was rendered.
SegmentOptions options_for(const SceneSpec& spec, const SegmentOptions& base = {});

struct DatasetFeatures {
  std::vector<FeatureRow> rows;   // ordered by manifest index, then class
  ConfusionMatrix segmentation;   // summed over images, segmented source only
};

/// Reads the manifest in `dir` and extracts features for every scene on up to
/// `threads` workers. Missing image or truth files are reported together.
DatasetFeatures dataset_features(const std::string& dir, FeatureSource source,
                                 const SegmentOptions& base, int threads);

/// CSV `image_id,class,f1,f2,f3,empty_flag,target`, 17 significant digits.
std::string features_csv(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> parse_features_csv(const std::string& text);

mlp::LabeledSet to_labeled_set(const std::vector<FeatureRow>& rows);

}  // namespace orchard
