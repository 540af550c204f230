#include "orchard/orchard.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <optional>
#include <string>

#include "file_util.hpp"
#include "orchard/dataset.hpp"
#include "orchard/error.hpp"
#include "orchard/features.hpp"
#include "orchard/metrics.hpp"
#include "orchard/mlp.hpp"
#include "orchard/segment.hpp"
#include "orchard/synthgen.hpp"
#include "parallel.hpp"

struct orchard_image {
  orchard::RgbImage img;
};

struct orchard_segmentation {
  orchard::Segmentation seg;
  orchard::SegmentOptions opts;
  std::optional<orchard::ConfusionMatrix> truth;
};

struct orchard_model {
  orchard::mlp::Network net;
  orchard::mlp::MinMaxScaler scaler;
  std::optional<orchard::mlp::TrainReport> report;
};

namespace {

using namespace orchard;

thread_local std::string g_last_error;

orchard_status fail(orchard_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

orchard_status status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound:
    case ErrorKind::kIo:
    case ErrorKind::kFormat:
    case ErrorKind::kTruncated:
    case ErrorKind::kVersionMismatch:
      return ORCHARD_ERR_IO;
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kDegenerateInput:
      return ORCHARD_ERR_PIPELINE;
  }
  return ORCHARD_ERR_PIPELINE;
}

// Invalid API arguments are usage errors, not pipeline failures.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
orchard_status api(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return ORCHARD_OK;
  } catch (const UsageError& e) {
    return fail(ORCHARD_ERR_USAGE, e.what());
  } catch (const Error& e) {
    return fail(status_for(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ORCHARD_ERR_PIPELINE, "out of memory");
  } catch (const std::exception& e) {
    return fail(ORCHARD_ERR_PIPELINE, e.what());
  }
}

template <typename T>
void require(const T* p, const char* name) {
  if (!p) throw UsageError(std::string(name) + " must not be null");
}

SegmentOptions to_options(const orchard_segment_options* o) {
  SegmentOptions s;
  if (!o) return s;
  if (o->variety != ORCHARD_VARIETY_RED && o->variety != ORCHARD_VARIETY_GOLDEN)
    throw UsageError("unknown variety");
  if (o->sky != ORCHARD_SKY_BLUE && o->sky != ORCHARD_SKY_CLOUDY) throw UsageError("unknown sky mode");
  if (o->equalize < ORCHARD_EQUALIZE_AUTO || o->equalize > ORCHARD_EQUALIZE_OFF)
    throw UsageError("unknown equalize mode");
  s.variety = o->variety == ORCHARD_VARIETY_GOLDEN ? Variety::kGoldenDelicious : Variety::kRedDelicious;
  s.sky = o->sky == ORCHARD_SKY_CLOUDY ? SkyMode::kCloudySky : SkyMode::kBlueSky;
  s.equalize = o->equalize == ORCHARD_EQUALIZE_ON    ? EqualizeMode::kOn
               : o->equalize == ORCHARD_EQUALIZE_OFF ? EqualizeMode::kOff
                                                     : EqualizeMode::kAuto;
  s.equalize_mean_threshold = o->equalize_mean_threshold;
  s.blur.sigma = o->blur_sigma;
  s.blur.passes = o->blur_passes;
  s.blur.sky_passes = o->sky_blur_passes;
  return s;
}

ClassLabel to_class(int cls) {
  if (cls < 0 || cls > 3) throw UsageError("unknown class");
  return static_cast<ClassLabel>(cls);
}

std::string segmentation_report(const Segmentation& seg, const SegmentOptions& opts,
                                const std::optional<ConfusionMatrix>& truth) {
  std::string out;
  char buf[160];
  out += std::string("variety: ") + to_string(opts.variety) + "\n";
  out += std::string("sky: ") + to_string(opts.sky) + "\n";
  out += std::string("equalize: ") + to_string(opts.equalize) + (seg.equalized ? " (applied)" : " (not applied)") + "\n";
  std::snprintf(buf, sizeof buf, "blur: sigma=%g passes=%d sky_passes=%d\n", opts.blur.sigma,
                opts.blur.passes, opts.blur.sky_passes);
  out += buf;
  std::snprintf(buf, sizeof buf, "threshold apple: %d\nthreshold leaves: %d\nthreshold sky: %d\n",
                seg.apples.threshold, seg.leaves.threshold, seg.sky.threshold);
  out += buf;
  for (ClassLabel l : kAllClasses) {
    std::snprintf(buf, sizeof buf, "density %s: %.6f\n", class_name(l), density(class_mask(seg.map, l)));
    out += buf;
  }
  for (const std::string& w : seg.warnings) out += "warning: " + w + "\n";
  if (truth) out += format_confusion(*truth);
  return out;
}

void save_segmentation(const Segmentation& seg, const std::string& report, const std::string& dir,
                       const std::string& stem) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIo, "cannot create output directory: " + dir);
  const fs::path base = fs::path(dir) / stem;
  save_image(seg.map, base.string() + ".classmap.pgm");
  for (ClassLabel l : kAllClasses)
    save_image(class_mask(seg.map, l), base.string() + "." + class_name(l) + ".pgm");
  detail::write_file_atomic(base.string() + ".report.txt", report);
}

mlp::Architecture to_arch(const orchard_train_options* o) {
  if (o->hidden_layers < 1 || o->hidden_layers > 2) throw UsageError("hidden_layers must be 1 or 2");
  mlp::Architecture a;
  a.hidden.assign(o->hidden, o->hidden + o->hidden_layers);
  return a;
}

mlp::TrainConfig to_config(const orchard_train_options* o) {
  if (o->rule != ORCHARD_RULE_GD && o->rule != ORCHARD_RULE_MOMENTUM) throw UsageError("unknown rule");
  mlp::TrainConfig c;
  c.rule = o->rule == ORCHARD_RULE_MOMENTUM ? mlp::UpdateRule::kMomentum : mlp::UpdateRule::kGradientDescent;
  c.momentum = o->momentum;
  c.learning_rate = o->learning_rate;
  c.max_epochs = o->max_epochs;
  c.goal_mse = o->goal_mse;
  c.seed = o->seed;
  c.split = {o->split[0], o->split[1], o->split[2]};
  return c;
}

double score(const orchard_model& m, const std::array<double, 3>& x) {
  const auto scaled = m.scaler.apply(std::span<const double>(x.data(), x.size()));
  return m.net.forward(scaled);
}

}  // namespace

extern "C" {

const char* orchard_last_error(void) { return g_last_error.c_str(); }

const char* orchard_version(void) { return "1.0.0"; }

void orchard_string_free(char* s) { std::free(s); }

orchard_status orchard_image_load(const char* path, orchard_image** out) {
  return api([&] {
    require(path, "path");
    require(out, "out");
    *out = new orchard_image{load_image(path)};
  });
}

void orchard_image_free(orchard_image* img) { delete img; }

orchard_status orchard_image_size(const orchard_image* img, int* width, int* height) {
  return api([&] {
    require(img, "image");
    if (width) *width = img->img.width();
    if (height) *height = img->img.height();
  });
}

orchard_status orchard_image_row_profile(const orchard_image* img, int row, char** csv) {
  return api([&] {
    require(img, "image");
    require(csv, "csv");
    const RowProfile p = row_profile(img->img, row);
    std::string out = "x,R,G,B\n";
    for (std::size_t x = 0; x < p.red.size(); ++x)
      out += std::to_string(x) + "," + std::to_string(p.red[x]) + "," + std::to_string(p.green[x]) +
             "," + std::to_string(p.blue[x]) + "\n";
    *csv = dup_string(out);
  });
}

void orchard_segment_options_init(orchard_segment_options* opts) {
  if (!opts) return;
  const SegmentOptions d;
  opts->variety = ORCHARD_VARIETY_RED;
  opts->sky = ORCHARD_SKY_BLUE;
  opts->equalize = ORCHARD_EQUALIZE_AUTO;
  opts->equalize_mean_threshold = d.equalize_mean_threshold;
  opts->blur_sigma = d.blur.sigma;
  opts->blur_passes = d.blur.passes;
  opts->sky_blur_passes = d.blur.sky_passes;
}

orchard_status orchard_segment(const orchard_image* img, const orchard_segment_options* opts,
                               orchard_segmentation** out) {
  return api([&] {
    require(img, "image");
    require(out, "out");
    auto* s = new orchard_segmentation;
    try {
      s->opts = to_options(opts);
      s->seg = segment_scene(img->img, s->opts);
    } catch (...) {
      delete s;
      throw;
    }
    *out = s;
  });
}

void orchard_segmentation_free(orchard_segmentation* seg) { delete seg; }

orchard_status orchard_segmentation_compare(orchard_segmentation* seg, const char* truth_path) {
  return api([&] {
    require(seg, "segmentation");
    require(truth_path, "truth_path");
    seg->truth = confusion(load_class_map(truth_path), seg->seg.map);
  });
}

orchard_status orchard_segmentation_f1(const orchard_segmentation* seg, int cls, double* f1) {
  return api([&] {
    require(seg, "segmentation");
    require(f1, "f1");
    if (!seg->truth) throw UsageError("no truth map has been compared");
    *f1 = seg->truth->f1(to_class(cls));
  });
}

orchard_status orchard_segmentation_report(const orchard_segmentation* seg, char** text) {
  return api([&] {
    require(seg, "segmentation");
    require(text, "text");
    *text = dup_string(segmentation_report(seg->seg, seg->opts, seg->truth));
  });
}

orchard_status orchard_segmentation_save(const orchard_segmentation* seg, const char* out_dir,
                                         const char* stem) {
  return api([&] {
    require(seg, "segmentation");
    require(out_dir, "out_dir");
    require(stem, "stem");
    save_segmentation(seg->seg, segmentation_report(seg->seg, seg->opts, seg->truth), out_dir, stem);
  });
}

orchard_status orchard_segment_batch(const char* dataset_dir, const orchard_segment_options* opts,
                                     const char* out_dir, int use_truth, int threads,
                                     char** summary) {
  return api([&] {
    require(dataset_dir, "dataset_dir");
    require(out_dir, "out_dir");
    namespace fs = std::filesystem;
    const SegmentOptions base = to_options(opts);
    const auto entries = read_manifest(dataset_dir);
    std::vector<std::string> lines(entries.size());
    std::vector<ConfusionMatrix> cms(entries.size());
    detail::parallel_for(entries.size(), threads, [&](std::size_t i) {
      const ManifestEntry& e = entries[i];
      const SegmentOptions o = options_for(e.spec, base);
      const RgbImage img = load_image((fs::path(dataset_dir) / e.image).string());
      Segmentation seg;
      try {
        seg = segment_scene(img, o);
      } catch (const Error& err) {
        throw Error(err.kind(), e.image + ": " + err.what());
      }
      std::optional<ConfusionMatrix> cm;
      if (use_truth) cms[i] = *(cm = confusion(load_class_map((fs::path(dataset_dir) / e.truth).string()), seg.map));
      const std::string stem = fs::path(e.image).stem().string();
      save_segmentation(seg, segmentation_report(seg, o, cm), out_dir, stem);
      char buf[200];
      std::snprintf(buf, sizeof buf, "%s,%d,%d,%d", stem.c_str(), seg.apples.threshold,
                    seg.leaves.threshold, seg.sky.threshold);
      lines[i] = buf;
      if (cm) {
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f", cm->f1(ClassLabel::kApple), cm->accuracy());
        lines[i] += buf;
      }
    });
    std::string out = use_truth ? "image,t_apple,t_leaves,t_sky,apple_f1,pixel_accuracy\n"
                                : "image,t_apple,t_leaves,t_sky\n";
    for (const auto& l : lines) out += l + "\n";
    if (use_truth) {
      ConfusionMatrix total;
      for (const auto& cm : cms) total += cm;
      out += format_confusion(total);
    }
    detail::write_file_atomic((fs::path(out_dir) / "summary.txt").string(), out);
    if (summary) *summary = dup_string(out);
  });
}

void orchard_synth_options_init(orchard_synth_options* opts) {
  if (!opts) return;
  const DatasetOptions d;
  opts->count = 1;
  opts->seed = 1;
  opts->width = d.base.width;
  opts->height = d.base.height;
  opts->varieties = ORCHARD_MIX_ALTERNATE;
  opts->skies = ORCHARD_SKYMIX_BLUE;
  opts->min_apples = d.min_apples;
  opts->max_apples = d.max_apples;
  opts->dark_fraction = d.dark_fraction;
  opts->glare_probability = d.glare_probability;
  opts->noise_sigma = d.base.noise_sigma;
  opts->sky_fraction = d.base.sky_fraction;
  opts->sky_fraction_jitter = d.sky_fraction_jitter;
  opts->bottom_up = 0;
}

orchard_status orchard_synth(const orchard_synth_options* o, const char* out_dir, int threads) {
  return api([&] {
    require(o, "options");
    require(out_dir, "out_dir");
    if (o->varieties < 0 || o->varieties > 2) throw UsageError("unknown variety mix");
    if (o->skies < 0 || o->skies > 2) throw UsageError("unknown sky mix");
    if (o->min_apples < 0 || o->max_apples < o->min_apples)
      throw Error(ErrorKind::kInvalidArgument, "apple count range must satisfy 0 <= min <= max");
    auto unit = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::kInvalidArgument, std::string(name) + " must lie in [0, 1]");
    };
    unit(o->dark_fraction, "dark fraction");
    unit(o->glare_probability, "glare probability");
    unit(o->sky_fraction_jitter, "sky fraction jitter");
    DatasetOptions d;
    d.base.width = o->width;
    d.base.height = o->height;
    d.base.noise_sigma = o->noise_sigma;
    d.base.sky_fraction = o->sky_fraction;
    d.varieties = static_cast<VarietyMix>(o->varieties);
    d.skies = static_cast<SkyMix>(o->skies);
    d.min_apples = o->min_apples;
    d.max_apples = o->max_apples;
    d.dark_fraction = o->dark_fraction;
    d.glare_probability = o->glare_probability;
    d.sky_fraction_jitter = o->sky_fraction_jitter;
    d.bottom_up = o->bottom_up != 0;
    gen_dataset(o->count, d, o->seed, out_dir, threads);
  });
}

orchard_status orchard_features(const char* dataset_dir, int source,
                                const orchard_segment_options* opts, int threads,
                                const char* csv_path) {
  return api([&] {
    require(dataset_dir, "dataset_dir");
    require(csv_path, "csv_path");
    if (source != ORCHARD_SOURCE_SEGMENTED && source != ORCHARD_SOURCE_TRUTH)
      throw UsageError("unknown feature source");
    const auto df = dataset_features(
        dataset_dir, source == ORCHARD_SOURCE_TRUTH ? FeatureSource::kTruth : FeatureSource::kSegmented,
        to_options(opts), threads);
    detail::write_file_atomic(csv_path, features_csv(df.rows));
  });
}

void orchard_train_options_init(orchard_train_options* opts) {
  if (!opts) return;
  const mlp::TrainConfig d;
  opts->hidden[0] = 50;
  opts->hidden[1] = 40;
  opts->hidden_layers = 2;
  opts->rule = ORCHARD_RULE_GD;
  opts->momentum = d.momentum;
  opts->learning_rate = d.learning_rate;
  opts->max_epochs = d.max_epochs;
  opts->goal_mse = d.goal_mse;
  opts->seed = d.seed;
  for (int i = 0; i < 3; ++i) opts->split[i] = d.split[static_cast<std::size_t>(i)];
}

orchard_status orchard_train(const char* features_csv_path, const orchard_train_options* opts,
                             orchard_model** out) {
  return api([&] {
    require(features_csv_path, "features_csv");
    require(opts, "options");
    require(out, "out");
    const mlp::Architecture arch = to_arch(opts);
    const mlp::TrainConfig cfg = to_config(opts);
    arch.validate();
    cfg.validate();
    const auto rows = parse_features_csv(detail::read_file(features_csv_path));
    mlp::FittedModel fm = mlp::fit(to_labeled_set(rows), arch, cfg);
    *out = new orchard_model{std::move(fm.net), std::move(fm.scaler), std::move(fm.report)};
  });
}

orchard_status orchard_model_save(const orchard_model* model, const char* path) {
  return api([&] {
    require(model, "model");
    require(path, "path");
    mlp::save_model(model->net, path);
    detail::write_file_atomic(std::string(path) + ".scale", mlp::serialize(model->scaler));
  });
}

orchard_status orchard_model_load(const char* path, orchard_model** out) {
  return api([&] {
    require(path, "path");
    require(out, "out");
    auto net = mlp::load_model(path);
    auto scaler = mlp::deserialize_scaler(detail::read_file(std::string(path) + ".scale"));
    if (scaler.lo.size() != static_cast<std::size_t>(net.architecture().input_size))
      throw Error(ErrorKind::kDimensionMismatch, "scaler width does not match the model input");
    *out = new orchard_model{std::move(net), std::move(scaler), std::nullopt};
  });
}

void orchard_model_free(orchard_model* model) { delete model; }

orchard_status orchard_model_report(const orchard_model* model, int include_timing, char** text) {
  return api([&] {
    require(model, "model");
    require(text, "text");
    if (!model->report) throw UsageError("model was loaded from disk and has no training report");
    *text = dup_string(mlp::format_report(*model->report, include_timing != 0));
  });
}

orchard_status orchard_model_training_log(const orchard_model* model, char** csv) {
  return api([&] {
    require(model, "model");
    require(csv, "csv");
    if (!model->report) throw UsageError("model was loaded from disk and has no training log");
    *csv = dup_string(mlp::training_log_csv(model->report->training));
  });
}

orchard_status orchard_model_predict(const orchard_model* model, const double features[3],
                                     double* out) {
  return api([&] {
    require(model, "model");
    require(features, "features");
    require(out, "out");
    *out = score(*model, {features[0], features[1], features[2]});
  });
}

orchard_status orchard_classify(const orchard_model* model, const orchard_image* img,
                                const orchard_segment_options* opts, char** report) {
  return api([&] {
    require(model, "model");
    require(img, "image");
    require(report, "report");
    const SegmentOptions o = to_options(opts);
    Segmentation seg;
    try {
      seg = segment_scene(img->img, o);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string("segment: ") + e.what());
    }
    const auto vectors = extract_all(seg.map);
    std::string out = "class,score,verdict,empty,f1,f2,f3\n";
    std::string notes;
    char buf[256];
    for (const FeatureVector& v : vectors) {
      const double s = score(*model, v.values);
      const bool apple = s > 0.5;
      std::snprintf(buf, sizeof buf, "%s,%.6f,%s,%d,%.17g,%.17g,%.17g\n", class_name(v.label), s,
                    apple ? "Apple" : "NonApple", v.empty ? 1 : 0, v.values[0], v.values[1],
                    v.values[2]);
      out += buf;
      if (apple && v.label != ClassLabel::kApple)
        notes += std::string("flag: ") + class_name(v.label) + " class classified as Apple\n";
      if (!apple && v.label == ClassLabel::kApple)
        notes += "flag: apple class classified as NonApple\n";
    }
    for (const std::string& w : seg.warnings) notes += "warning: " + w + "\n";
    *report = dup_string(out + notes);
  });
}

orchard_status orchard_eval(const orchard_model* model, const char* features_csv_path,
                            char** report) {
  return api([&] {
    require(model, "model");
    require(features_csv_path, "features_csv");
    require(report, "report");
    const auto rows = parse_features_csv(detail::read_file(features_csv_path));
    const mlp::LabeledSet set = model->scaler.apply(to_labeled_set(rows));
    const mlp::Metrics m = mlp::evaluate(model->net, set);
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    const Eigen::MatrixXd out = model->net.forward(set.inputs);
    for (Eigen::Index i = 0; i < out.cols(); ++i) {
      const bool pred = out(0, i) > 0.5, actual = set.targets(i) > 0.5;
      (pred ? (actual ? tp : fp) : (actual ? fn : tn))++;
    }
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "count: %zu\naccuracy: %.17g\nmse: %.17g\nr: %.17g%s\n"
                  "true_apple: %zu\nfalse_apple: %zu\ntrue_nonapple: %zu\nfalse_nonapple: %zu\n",
                  m.count, m.accuracy, m.mse, m.r, m.r_defined ? "" : " (undefined)", tp, fp, tn, fn);
    *report = dup_string(buf);
  });
}

}  // extern "C"
