#include "orchard/dataset.hpp"

#include <filesystem>
#include <mutex>
#include <sstream>

#include "file_util.hpp"
#include "orchard/error.hpp"
#include "parallel.hpp"

namespace orchard {

const char* to_string(FeatureSource s) { return s == FeatureSource::kTruth ? "truth" : "segmented"; }

FeatureSource parse_feature_source(const std::string& s) {
  if (s == "segmented") return FeatureSource::kSegmented;
  if (s == "truth") return FeatureSource::kTruth;
  throw Error(ErrorKind::kInvalidArgument, "unknown feature source: " + s);
}

std::array<FeatureRow, 4> feature_rows(const ClassMap& map, int image_id) {
  const auto vectors = extract_all(map);
  std::array<FeatureRow, 4> rows;
  for (std::size_t i = 0; i < 4; ++i) {
    rows[i].image_id = image_id;
    rows[i].label = vectors[i].label;
    rows[i].values = vectors[i].values;
    rows[i].empty = vectors[i].empty;
    rows[i].target = vectors[i].label == ClassLabel::kApple ? 1 : 0;
  }
  return rows;
}

SegmentOptions options_for(const SceneSpec& spec, const SegmentOptions& base) {
  SegmentOptions o = base;
  o.variety = spec.variety;
  o.sky = spec.sky;
  return o;
}

DatasetFeatures dataset_features(const std::string& dir, FeatureSource source,
                                 const SegmentOptions& base, int threads) {
  namespace fs = std::filesystem;
  const auto entries = read_manifest(dir);
  std::string missing;
  for (const ManifestEntry& e : entries) {
    const std::string need = source == FeatureSource::kTruth ? e.truth : e.image;
    if (!fs::exists(fs::path(dir) / need)) missing += " " + need;
    if (source == FeatureSource::kSegmented && !fs::exists(fs::path(dir) / e.truth))
      missing += " " + e.truth;
  }
  if (!missing.empty()) throw Error(ErrorKind::kNotFound, "missing dataset files:" + missing);

  DatasetFeatures out;
  out.rows.resize(entries.size() * 4);
  std::vector<ConfusionMatrix> per_image(entries.size());
  detail::parallel_for(entries.size(), threads, [&](std::size_t i) {
    const ManifestEntry& e = entries[i];
    const ClassMap truth = load_class_map((fs::path(dir) / e.truth).string());
    ClassMap map;
    if (source == FeatureSource::kTruth) {
      map = truth;
    } else {
      const RgbImage img = load_image((fs::path(dir) / e.image).string());
      try {
        map = segment_scene(img, options_for(e.spec, base)).map;
      } catch (const Error& err) {
        throw Error(err.kind(), e.image + ": " + err.what());
      }
      per_image[i] = confusion(truth, map);
    }
    const auto rows = feature_rows(map, e.index);
    std::copy(rows.begin(), rows.end(), out.rows.begin() + static_cast<std::ptrdiff_t>(i * 4));
  });
  for (const auto& cm : per_image) out.segmentation += cm;
  return out;
}

std::string features_csv(const std::vector<FeatureRow>& rows) {
  std::string out = "image_id,class,f1,f2,f3,empty_flag,target\n";
  for (const FeatureRow& r : rows) {
    out += std::to_string(r.image_id) + "," + class_name(r.label);
    for (double v : r.values) out += "," + detail::format_double(v);
    out += std::string(",") + (r.empty ? "1" : "0") + "," + std::to_string(r.target) + "\n";
  }
  return out;
}

std::vector<FeatureRow> parse_features_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "image_id,class,f1,f2,f3,empty_flag,target")
    throw Error(ErrorKind::kFormat, "feature CSV: unexpected header");
  std::vector<FeatureRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 7)
      throw Error(ErrorKind::kFormat, "feature CSV line " + std::to_string(lineno) + ": expected 7 fields");
    try {
      FeatureRow r;
      r.image_id = std::stoi(f[0]);
      r.label = class_from_name(f[1]);
      for (int k = 0; k < 3; ++k) r.values[k] = detail::parse_double(f[2 + k]);
      r.empty = f[5] == "1";
      r.target = std::stoi(f[6]);
      if (r.target != 0 && r.target != 1) throw Error(ErrorKind::kFormat, "target must be 0 or 1");
      rows.push_back(r);
    } catch (const std::exception& ex) {
      throw Error(ErrorKind::kFormat,
                  "feature CSV line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  if (rows.empty()) throw Error(ErrorKind::kFormat, "feature CSV has no rows");
  return rows;
}

mlp::LabeledSet to_labeled_set(const std::vector<FeatureRow>& rows) {
  mlp::LabeledSet set;
  set.inputs.resize(3, static_cast<Eigen::Index>(rows.size()));
  set.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int k = 0; k < 3; ++k) set.inputs(k, static_cast<Eigen::Index>(i)) = rows[i].values[k];
    set.targets(static_cast<Eigen::Index>(i)) = rows[i].target;
  }
  return set;
}

}  // namespace orchard
