#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>

#include "orchard/dataset.hpp"
#include "orchard/error.hpp"
#include "orchard/metrics.hpp"
#include "test_util.hpp"

using namespace orchard;
namespace fs = std::filesystem;

namespace {

ClassMap map_from(int w, int h, const std::vector<int>& labels) {
  ClassMap m(w, h);
  for (std::size_t i = 0; i < labels.size(); ++i) m[i] = static_cast<ClassLabel>(labels[i]);
  return m;
}

DatasetOptions tiny_options() {
  DatasetOptions o;
  o.base.width = 96;
  o.base.height = 72;
  o.skies = SkyMix::kAlternate;
  return o;
}

}  // namespace

TEST_CASE("confusion matrix counts and scores") {
  // truth:  A A L L S S T T
  // pred:   A L L L S A T S
  const ClassMap truth = map_from(4, 2, {0, 0, 1, 1, 2, 2, 3, 3});
  const ClassMap pred = map_from(4, 2, {0, 1, 1, 1, 2, 0, 3, 2});
  const ConfusionMatrix cm = confusion(truth, pred);
  CHECK(cm.total() == 8);
  CHECK(cm.counts[0][0] == 1);
  CHECK(cm.counts[0][1] == 1);
  CHECK(cm.counts[2][0] == 1);
  CHECK(cm.counts[3][2] == 1);
  CHECK(cm.accuracy() == doctest::Approx(5.0 / 8.0));
  // apple: tp 1, fp 1 (sky), fn 1 (leaves)
  CHECK(cm.precision(ClassLabel::kApple) == doctest::Approx(0.5));
  CHECK(cm.recall(ClassLabel::kApple) == doctest::Approx(0.5));
  CHECK(cm.f1(ClassLabel::kApple) == doctest::Approx(0.5));
  // leaves: tp 2, fp 1, fn 0
  CHECK(cm.precision(ClassLabel::kLeaves) == doctest::Approx(2.0 / 3.0));
  CHECK(cm.recall(ClassLabel::kLeaves) == 1.0);
  CHECK(cm.f1(ClassLabel::kLeaves) == doctest::Approx(0.8));

  ConfusionMatrix twice = cm;
  twice += cm;
  CHECK(twice.total() == 16);
  CHECK(twice.f1(ClassLabel::kLeaves) == doctest::Approx(0.8));

  const ConfusionMatrix none = confusion(map_from(2, 1, {1, 1}), map_from(2, 1, {1, 1}));
  CHECK(none.f1(ClassLabel::kApple) == 0.0);
  CHECK(none.accuracy() == 1.0);

  const std::string text = format_confusion(cm);
  CHECK(text.find("pixel_accuracy=0.625") != std::string::npos);
  CHECK(text.find("apple precision=0.5") != std::string::npos);

  try {
    confusion(truth, ClassMap(2, 2));
    FAIL("expected a dimension mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDimensionMismatch);
  }
}

TEST_CASE("feature rows of one class map") {
  ClassMap map(30, 20, ClassLabel::kSky);
  for (int y = 12; y < 20; ++y)
    for (int x = 0; x < 30; ++x) map.at(x, y) = ClassLabel::kLeaves;
  const auto rows = feature_rows(map, 7);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(rows[c].image_id == 7);
    CHECK(rows[c].label == kAllClasses[c]);
    CHECK(rows[c].target == (c == 0 ? 1 : 0));
    const FeatureVector v = class_feature_vector(map, kAllClasses[c]);
    CHECK(rows[c].values == v.values);
    CHECK(rows[c].empty == v.empty);
  }
  CHECK(rows[0].empty);
  CHECK(rows[3].empty);

  const mlp::LabeledSet set = to_labeled_set({rows.begin(), rows.end()});
  CHECK(set.inputs.rows() == 3);
  CHECK(set.size() == 4);
  CHECK(set.targets(0) == 1.0);
  CHECK(set.targets(2) == 0.0);
  CHECK(set.inputs(1, 2) == rows[2].values[1]);
}

TEST_CASE("feature sources and scene options") {
  CHECK(parse_feature_source("truth") == FeatureSource::kTruth);
  CHECK(parse_feature_source("segmented") == FeatureSource::kSegmented);
  CHECK(std::string(to_string(FeatureSource::kTruth)) == "truth");
  CHECK_THROWS_AS(parse_feature_source("oracle"), Error);

  SceneSpec s;
  s.variety = Variety::kGoldenDelicious;
  s.sky = SkyMode::kCloudySky;
  SegmentOptions base;
  base.blur.passes = 3;
  base.equalize = EqualizeMode::kOff;
  const SegmentOptions o = options_for(s, base);
  CHECK(o.variety == Variety::kGoldenDelicious);
  CHECK(o.sky == SkyMode::kCloudySky);
  CHECK(o.blur.passes == 3);
  CHECK(o.equalize == EqualizeMode::kOff);
}

TEST_CASE("dataset features") {
  testutil::TempDir dir("dataset");
  const std::string data = dir.file("data");
  const auto entries = gen_dataset(6, tiny_options(), 21, data, 2);

  SUBCASE("truth source reproduces per-map features") {
    const DatasetFeatures f = dataset_features(data, FeatureSource::kTruth, {}, 1);
    REQUIRE(f.rows.size() == 24);
    CHECK(f.segmentation.total() == 0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto rows = feature_rows(load_class_map(data + "/" + entries[i].truth), entries[i].index);
      for (std::size_t c = 0; c < 4; ++c) CHECK(f.rows[4 * i + c].values == rows[c].values);
    }
  }
  SUBCASE("segmented source runs the pipeline with each scene's settings") {
    const DatasetFeatures one = dataset_features(data, FeatureSource::kSegmented, {}, 1);
    const DatasetFeatures many = dataset_features(data, FeatureSource::kSegmented, {}, 3);
    CHECK(features_csv(one.rows) == features_csv(many.rows));
    CHECK(one.segmentation.total() == 6u * 96u * 72u);
    CHECK(one.segmentation.counts == many.segmentation.counts);
    const auto& e = entries[3];
    const Segmentation seg = segment_scene(load_image(data + "/" + e.image), options_for(e.spec));
    const auto rows = feature_rows(seg.map, e.index);
    for (std::size_t c = 0; c < 4; ++c) CHECK(one.rows[12 + c].values == rows[c].values);
  }
  SUBCASE("missing files are listed together") {
    fs::remove(fs::path(data) / entries[1].image);
    fs::remove(fs::path(data) / entries[4].truth);
    try {
      dataset_features(data, FeatureSource::kSegmented, {}, 1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kNotFound);
      const std::string msg = e.what();
      CHECK(msg.find(entries[1].image) != std::string::npos);
      CHECK(msg.find(entries[4].truth) != std::string::npos);
    }
  }
  SUBCASE("no manifest") {
    CHECK_THROWS_AS(dataset_features(dir.file("empty"), FeatureSource::kTruth, {}, 1), Error);
  }
}
