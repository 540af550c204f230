#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "orchard/orchard.h"

namespace {

struct CliError {
  int code;
  std::string message;
};

void check(orchard_status s) {
  if (s != ORCHARD_OK) throw CliError{static_cast<int>(s), orchard_last_error()};
}

struct StringDeleter {
  void operator()(char* s) const { orchard_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct ImageDeleter {
  void operator()(orchard_image* p) const { orchard_image_free(p); }
};
struct SegmentationDeleter {
  void operator()(orchard_segmentation* p) const { orchard_segmentation_free(p); }
};
struct ModelDeleter {
  void operator()(orchard_model* p) const { orchard_model_free(p); }
};

std::unique_ptr<orchard_image, ImageDeleter> load_image(const std::string& path) {
  orchard_image* img = nullptr;
  check(orchard_image_load(path.c_str(), &img));
  return std::unique_ptr<orchard_image, ImageDeleter>(img);
}

std::unique_ptr<orchard_model, ModelDeleter> load_model(const std::string& path) {
  orchard_model* m = nullptr;
  check(orchard_model_load(path.c_str(), &m));
  return std::unique_ptr<orchard_model, ModelDeleter>(m);
}

void write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    if (!out) throw CliError{ORCHARD_ERR_IO, "cannot write " + path};
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CliError{ORCHARD_ERR_IO, "cannot write " + path + ": " + ec.message()};
}

// Worker count: hardware concurrency, capped by ORCHARD_THREADS when set.
int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("ORCHARD_THREADS"); env && *env) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (*end != '\0' || cap < 1) throw CliError{ORCHARD_ERR_USAGE, "ORCHARD_THREADS must be a positive integer"};
    if (cap < n) n = static_cast<int>(cap);
  }
  return n;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CliError{ORCHARD_ERR_USAGE, std::string("bad ") + what + ": " + s};
    }
  }
  return out;
}

const std::map<std::string, int> kVarieties{{"red", ORCHARD_VARIETY_RED}, {"golden", ORCHARD_VARIETY_GOLDEN}};
const std::map<std::string, int> kSkies{{"blue", ORCHARD_SKY_BLUE}, {"cloudy", ORCHARD_SKY_CLOUDY}};
const std::map<std::string, int> kEqualize{
    {"auto", ORCHARD_EQUALIZE_AUTO}, {"on", ORCHARD_EQUALIZE_ON}, {"off", ORCHARD_EQUALIZE_OFF}};

void add_segment_flags(CLI::App* cmd, orchard_segment_options& o, bool with_scene) {
  if (with_scene) {
    cmd->add_option("--variety", o.variety, "Apple variety: red or golden")
        ->transform(CLI::CheckedTransformer(kVarieties, CLI::ignore_case));
    cmd->add_option("--sky", o.sky, "Sky mode: blue or cloudy")
        ->transform(CLI::CheckedTransformer(kSkies, CLI::ignore_case));
  }
  cmd->add_option("--equalize", o.equalize, "Histogram equalization: auto, on or off")
      ->transform(CLI::CheckedTransformer(kEqualize, CLI::ignore_case));
  cmd->add_option("--equalize-threshold", o.equalize_mean_threshold,
                  "Auto mode equalizes when the mean gray level is below this");
  cmd->add_option("--blur-sigma", o.blur_sigma, "Gaussian sigma for difference images");
  cmd->add_option("--blur-passes", o.blur_passes, "Blur passes for apple and leaf images");
  cmd->add_option("--sky-blur-passes", o.sky_blur_passes, "Blur passes for the sky image");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Apple recognition in orchard scenes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(orchard_version()));
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // synth
  orchard_synth_options synth;
  orchard_synth_options_init(&synth);
  synth.count = 200;
  std::string synth_out, synth_variety = "mixed", synth_sky = "blue";
  bool bottom_up = false;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
  c_synth->add_option("--out", synth_out, "Output directory")->required();
  c_synth->add_option("--n", synth.count, "Number of scenes");
  c_synth->add_option("--seed", synth.seed, "Dataset seed");
  c_synth->add_option("--width", synth.width, "Scene width");
  c_synth->add_option("--height", synth.height, "Scene height");
  c_synth->add_option("--variety", synth_variety, "red, golden or mixed")
      ->check(CLI::IsMember({"red", "golden", "mixed"}));
  c_synth->add_option("--sky", synth_sky, "blue, cloudy or mixed")
      ->check(CLI::IsMember({"blue", "cloudy", "mixed"}));
  c_synth->add_option("--min-apples", synth.min_apples, "Fewest apples per scene");
  c_synth->add_option("--max-apples", synth.max_apples, "Most apples per scene");
  c_synth->add_option("--dark-fraction", synth.dark_fraction, "Probability of a dark scene");
  c_synth->add_option("--glare", synth.glare_probability, "Probability of sun glare on apples");
  c_synth->add_option("--noise-sigma", synth.noise_sigma, "Pixel noise standard deviation");
  c_synth->add_option("--sky-fraction", synth.sky_fraction, "Fraction of frame height above the horizon");
  c_synth->add_option("--sky-jitter", synth.sky_fraction_jitter, "Per-scene sky fraction jitter");
  c_synth->add_flag("--bottom-up", bottom_up, "Sky-dominant framing looking up into the canopy");

  // segment
  orchard_segment_options seg_opts;
  orchard_segment_options_init(&seg_opts);
  std::string seg_input, seg_batch, seg_out, seg_stem, seg_truth;
  bool batch_truth = false;
  auto* c_segment = app.add_subcommand("segment", "Segment an image into the four classes");
  auto* in_opt = c_segment->add_option("--input", seg_input, "Input PPM image");
  auto* batch_opt = c_segment->add_option("--batch", seg_batch, "Dataset directory to segment");
  in_opt->excludes(batch_opt);
  c_segment->add_option("--out", seg_out, "Output directory")->required();
  c_segment->add_option("--stem", seg_stem, "Output file stem (default: input file name)");
  c_segment->add_option("--truth", seg_truth, "Truth class map for a confusion report")->excludes(batch_opt);
  c_segment->add_flag("--batch-truth", batch_truth, "Score batch output against manifest truth")->needs(batch_opt);
  add_segment_flags(c_segment, seg_opts, true);

  // profile
  std::string prof_input, prof_out;
  int prof_row = 0;
  auto* c_profile = app.add_subcommand("profile", "Color profile of one image row");
  c_profile->add_option("--input", prof_input, "Input image")->required();
  c_profile->add_option("--row", prof_row, "Row index")->required();
  c_profile->add_option("--out", prof_out, "CSV output path (default: stdout)");

  // features
  orchard_segment_options feat_opts;
  orchard_segment_options_init(&feat_opts);
  std::string feat_data, feat_out;
  int feat_source = ORCHARD_SOURCE_SEGMENTED;
  auto* c_features = app.add_subcommand("features", "Class feature vectors for a dataset");
  c_features->add_option("--data", feat_data, "Dataset directory with manifest.csv")->required();
  c_features->add_option("--out", feat_out, "Feature CSV path")->required();
  c_features->add_option("--source", feat_source, "Class maps from: segmented or truth")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, int>{{"segmented", ORCHARD_SOURCE_SEGMENTED}, {"truth", ORCHARD_SOURCE_TRUTH}}));
  add_segment_flags(c_features, feat_opts, false);

  // train
  orchard_train_options train;
  orchard_train_options_init(&train);
  std::string train_features, train_model, train_report, train_log, train_arch = "50,40",
                                                                    train_split = "60,20,20";
  auto* c_train = app.add_subcommand("train", "Train the apple classifier");
  c_train->add_option("--features", train_features, "Feature CSV")->required();
  c_train->add_option("--model", train_model, "Model output path")->required();
  c_train->add_option("--report", train_report, "Report output path");
  c_train->add_option("--log", train_log, "Per-epoch MSE CSV path");
  c_train->add_option("--arch", train_arch, "Hidden layer widths, e.g. 50,40");
  c_train->add_option("--rule", train.rule, "gd or momentum")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, int>{{"gd", ORCHARD_RULE_GD}, {"momentum", ORCHARD_RULE_MOMENTUM}}));
  c_train->add_option("--mu", train.momentum, "Momentum coefficient in [0, 1)");
  c_train->add_option("--lr", train.learning_rate, "Learning rate");
  c_train->add_option("--epochs", train.max_epochs, "Maximum epochs");
  c_train->add_option("--goal", train.goal_mse, "Goal training MSE (inf disables)");
  c_train->add_option("--split", train_split, "Train,validation,test percentages");
  c_train->add_option("--seed", train.seed, "Split and initialization seed");

  // classify
  orchard_segment_options cls_opts;
  orchard_segment_options_init(&cls_opts);
  std::string cls_model, cls_input, cls_out;
  auto* c_classify = app.add_subcommand("classify", "Classify the four classes of an image");
  c_classify->add_option("--model", cls_model, "Trained model")->required();
  c_classify->add_option("--input", cls_input, "Input image")->required();
  c_classify->add_option("--out", cls_out, "Report output path");
  add_segment_flags(c_classify, cls_opts, true);

  // eval
  std::string eval_model, eval_features, eval_out;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a model on a feature CSV");
  c_eval->add_option("--model", eval_model, "Trained model")->required();
  c_eval->add_option("--features", eval_features, "Feature CSV")->required();
  c_eval->add_option("--out", eval_out, "Report output path");

  std::string config_path;
  for (CLI::App* sub : app.get_subcommands({}))
    sub->add_option("--config", config_path, "key = value file; command-line flags take precedence");

  try {
    app.parse(argc, argv);
    if (!config_path.empty()) {
      // Re-parse with the file's settings ahead of the real arguments so the
      // last occurrence, the command-line one, wins.
      CLI::App* sub = app.get_subcommands().front();
      std::vector<std::string> args{sub->get_name()};
      for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(config_path)) {
        if (!item.parents.empty() && item.parents != std::vector<std::string>{sub->get_name()}) continue;
        if (item.name == "config" || item.name == "++" || item.name == "--") continue;
        if (!sub->get_option_no_throw("--" + item.name))
          throw CLI::ConfigError("unknown key in " + config_path + ": " + item.fullname());
        for (const std::string& v : item.inputs) args.push_back("--" + item.name + "=" + v);
      }
      for (int i = 1; i < argc; ++i)
        if (argv[i] != sub->get_name()) args.emplace_back(argv[i]);
      std::reverse(args.begin(), args.end());
      app.clear();
      app.parse(args);
    }
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ORCHARD_ERR_USAGE;
  }

  try {
    if (c_synth->parsed()) {
      synth.varieties = synth_variety == "red"      ? ORCHARD_MIX_RED
                        : synth_variety == "golden" ? ORCHARD_MIX_GOLDEN
                                                    : ORCHARD_MIX_ALTERNATE;
      synth.skies = synth_sky == "blue"     ? ORCHARD_SKYMIX_BLUE
                    : synth_sky == "cloudy" ? ORCHARD_SKYMIX_CLOUDY
                                            : ORCHARD_SKYMIX_ALTERNATE;
      synth.bottom_up = bottom_up ? 1 : 0;
      check(orchard_synth(&synth, synth_out.c_str(), worker_count()));
      std::printf("wrote %d scenes to %s\n", synth.count, synth_out.c_str());
    } else if (c_segment->parsed()) {
      if (!seg_batch.empty()) {
        char* summary = nullptr;
        check(orchard_segment_batch(seg_batch.c_str(), &seg_opts, seg_out.c_str(), batch_truth ? 1 : 0,
                                    worker_count(), &summary));
        OwnedString owned(summary);
        std::fputs(summary, stdout);
      } else {
        if (seg_input.empty()) throw CliError{ORCHARD_ERR_USAGE, "segment needs --input or --batch"};
        auto img = load_image(seg_input);
        orchard_segmentation* raw = nullptr;
        check(orchard_segment(img.get(), &seg_opts, &raw));
        std::unique_ptr<orchard_segmentation, SegmentationDeleter> seg(raw);
        if (!seg_truth.empty()) check(orchard_segmentation_compare(seg.get(), seg_truth.c_str()));
        const std::string stem =
            seg_stem.empty() ? std::filesystem::path(seg_input).stem().string() : seg_stem;
        check(orchard_segmentation_save(seg.get(), seg_out.c_str(), stem.c_str()));
        char* report = nullptr;
        check(orchard_segmentation_report(seg.get(), &report));
        OwnedString owned(report);
        std::fputs(report, stdout);
      }
    } else if (c_profile->parsed()) {
      auto img = load_image(prof_input);
      char* csv = nullptr;
      check(orchard_image_row_profile(img.get(), prof_row, &csv));
      OwnedString owned(csv);
      if (prof_out.empty()) std::fputs(csv, stdout);
      else write_text(prof_out, csv);
    } else if (c_features->parsed()) {
      check(orchard_features(feat_data.c_str(), feat_source, &feat_opts, worker_count(), feat_out.c_str()));
      std::printf("wrote %s\n", feat_out.c_str());
    } else if (c_train->parsed()) {
      const auto hidden = parse_list(train_arch, "--arch");
      if (hidden.empty() || hidden.size() > 2)
        throw CliError{ORCHARD_ERR_USAGE, "--arch takes one or two hidden layer widths"};
      train.hidden_layers = static_cast<int>(hidden.size());
      for (std::size_t i = 0; i < hidden.size(); ++i) {
        if (hidden[i] < 1 || hidden[i] != static_cast<int>(hidden[i]))
          throw CliError{ORCHARD_ERR_USAGE, "--arch widths must be positive integers"};
        train.hidden[i] = static_cast<int>(hidden[i]);
      }
      const auto split = parse_list(train_split, "--split");
      if (split.size() != 3) throw CliError{ORCHARD_ERR_USAGE, "--split takes three percentages"};
      for (int i = 0; i < 3; ++i) train.split[i] = split[static_cast<std::size_t>(i)] / 100.0;

      orchard_model* raw = nullptr;
      check(orchard_train(train_features.c_str(), &train, &raw));
      std::unique_ptr<orchard_model, ModelDeleter> model(raw);
      check(orchard_model_save(model.get(), train_model.c_str()));
      char* text = nullptr;
      if (!train_report.empty()) {
        check(orchard_model_report(model.get(), 0, &text));
        OwnedString owned(text);
        write_text(train_report, text);
      }
      if (!train_log.empty()) {
        check(orchard_model_training_log(model.get(), &text));
        OwnedString owned(text);
        write_text(train_log, text);
      }
      check(orchard_model_report(model.get(), 1, &text));
      OwnedString owned(text);
      std::fputs(text, stdout);
    } else if (c_classify->parsed()) {
      auto model = load_model(cls_model);
      auto img = load_image(cls_input);
      char* report = nullptr;
      check(orchard_classify(model.get(), img.get(), &cls_opts, &report));
      OwnedString owned(report);
      if (!cls_out.empty()) write_text(cls_out, report);
      std::fputs(report, stdout);
    } else if (c_eval->parsed()) {
      auto model = load_model(eval_model);
      char* report = nullptr;
      check(orchard_eval(model.get(), eval_features.c_str(), &report));
      OwnedString owned(report);
      if (!eval_out.empty()) write_text(eval_out, report);
      std::fputs(report, stdout);
    }
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code;
  }
  return 0;
}
