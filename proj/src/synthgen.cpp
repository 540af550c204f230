#include "orchard/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "file_util.hpp"
#include "orchard/error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace orchard {
namespace {

using detail::Rng;

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::uint8_t clamp_byte(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

class Canvas {
 public:
  Canvas(int w, int h) : img(w, h), truth(w, h, ClassLabel::kTrunkBranches), glare(w, h, 0) {}

  void paint(int x, int y, Rgb c, ClassLabel label, bool is_glare = false) {
    img.set(x, y, c);
    truth.at(x, y) = label;
    glare.at(x, y) = is_glare ? 1 : 0;
  }

  template <typename Inside>
  void fill_region(double x0, double y0, double x1, double y1, Inside&& inside, Rgb c,
                   ClassLabel label, bool is_glare = false) {
    const int xa = std::max(0, static_cast<int>(std::floor(x0)));
    const int ya = std::max(0, static_cast<int>(std::floor(y0)));
    const int xb = std::min(img.width() - 1, static_cast<int>(std::ceil(x1)));
    const int yb = std::min(img.height() - 1, static_cast<int>(std::ceil(y1)));
    for (int y = ya; y <= yb; ++y)
      for (int x = xa; x <= xb; ++x)
        if (inside(static_cast<double>(x), static_cast<double>(y))) paint(x, y, c, label, is_glare);
  }

  void disc(double cx, double cy, double r, Rgb c, ClassLabel label, bool is_glare = false) {
    fill_region(cx - r, cy - r, cx + r, cy + r,
                [&](double x, double y) { return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r; },
                c, label, is_glare);
  }

  void ellipse(double cx, double cy, double a, double b, double angle, Rgb c, ClassLabel label) {
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double ext = std::max(a, b);
    fill_region(cx - ext, cy - ext, cx + ext, cy + ext,
                [&](double x, double y) {
                  const double u = ((x - cx) * ca + (y - cy) * sa) / a;
                  const double v = (-(x - cx) * sa + (y - cy) * ca) / b;
                  return u * u + v * v <= 1.0;
                },
                c, label);
  }

  void segment(double x0, double y0, double x1, double y1, double half_width, Rgb c,
               ClassLabel label) {
    const double dx = x1 - x0, dy = y1 - y0;
    const double len2 = std::max(dx * dx + dy * dy, 1e-12);
    fill_region(std::min(x0, x1) - half_width, std::min(y0, y1) - half_width,
                std::max(x0, x1) + half_width, std::max(y0, y1) + half_width,
                [&](double x, double y) {
                  const double t = std::clamp(((x - x0) * dx + (y - y0) * dy) / len2, 0.0, 1.0);
                  const double px = x0 + t * dx - x, py = y0 + t * dy - y;
                  return px * px + py * py <= half_width * half_width;
                },
                c, label);
  }

  RgbImage img;
  ClassMap truth;
  BinaryMask glare;
};

Rgb sky_color(const SceneSpec& spec, const Palette& p, Rng& rng) {
  if (spec.sky == SkyMode::kBlueSky) {
    return {clamp_byte(uniform_int(rng, p.sky_r_lo, p.sky_r_hi)),
            clamp_byte(uniform_int(rng, p.sky_g_lo, p.sky_g_hi)),
            clamp_byte(uniform_int(rng, p.sky_b_lo, p.sky_b_hi))};
  }
  const int base = uniform_int(rng, p.cloud_lo, p.cloud_hi);
  const int g = base + uniform_int(rng, 0, 1);
  const int b = std::min(255, std::max(base, g) + uniform_int(rng, p.cloud_blue_lift_lo, p.cloud_blue_lift_hi));
  return {clamp_byte(base), clamp_byte(g), clamp_byte(b)};
}

// The blue offset tracks the red one so leaves keep R - B small; otherwise
// leaf R - B reaches into the golden apple range. It stays above the red
// offset so R > B.
Rgb leaf_color(const Palette& p, Rng& rng) {
  const int g = uniform_int(rng, p.leaf_g_lo, p.leaf_g_hi);
  const int r_off = uniform_int(rng, p.leaf_r_off_lo, p.leaf_r_off_hi);
  const int b_off = std::clamp(r_off + uniform_int(rng, 1, p.leaf_rb_spread),
                               std::max(p.leaf_b_off_lo, r_off + 1), p.leaf_b_off_hi);
  return {clamp_byte(g - r_off), clamp_byte(g), clamp_byte(g - b_off)};
}

Rgb apple_color(Variety v, const Palette& p, Rng& rng) {
  if (v == Variety::kRedDelicious) {
    const int r = uniform_int(rng, p.red_r_lo, p.red_r_hi);
    const int g = r - uniform_int(rng, p.red_g_off_lo, p.red_g_off_hi);
    const int b = std::max(0, g + uniform_int(rng, -p.red_b_spread, p.red_b_spread));
    return {clamp_byte(r), clamp_byte(g), clamp_byte(b)};
  }
  const int r = uniform_int(rng, p.gold_lo, p.gold_hi);
  const int g = std::clamp(r + uniform_int(rng, -p.gold_g_spread, p.gold_g_spread), p.gold_lo, p.gold_hi);
  const int b = r - uniform_int(rng, p.gold_b_off_lo, p.gold_b_off_hi);
  return {clamp_byte(r), clamp_byte(g), clamp_byte(b)};
}

Rgb glare_color(const Palette& p, Rng& rng) {
  const int r = uniform_int(rng, p.glare_r_lo, p.glare_r_hi);
  return {clamp_byte(r), clamp_byte(r - uniform_int(rng, p.glare_g_off_lo, p.glare_g_off_hi)),
          clamp_byte(r - uniform_int(rng, 0, p.glare_b_off_hi))};
}

Rgb bark(int r, int g, int b, int jitter) { return {clamp_byte(r + jitter), clamp_byte(g + jitter), clamp_byte(b + jitter)}; }

}  // namespace

const char* to_string(Brightness b) { return b == Brightness::kBright ? "bright" : "dark"; }

void SceneSpec::validate() const {
  if (width < 16 || height < 16) throw Error(ErrorKind::kInvalidArgument, "scene must be at least 16x16");
  if (apple_count < 0) throw Error(ErrorKind::kInvalidArgument, "apple_count must be >= 0");
  if (!(sky_fraction >= 0.0 && sky_fraction <= 1.0))
    throw Error(ErrorKind::kInvalidArgument, "sky_fraction must lie in [0, 1]");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw Error(ErrorKind::kInvalidArgument, "noise_sigma must be >= 0");
}

SceneSpec bottom_up_preset(SceneSpec base) {
  base.sky_fraction = 0.9;
  return base;
}

LabeledScene gen_scene(const SceneSpec& spec, const Palette& p) {
  spec.validate();
  Rng rng(spec.seed);
  const double W = spec.width, H = spec.height;
  const double scale = std::min(W, H) / 384.0;
  const double horizon = spec.sky_fraction * H;
  Canvas cv(spec.width, spec.height);

  // Sky above the horizon, grass (a green object, so the leaves class) below.
  const Rgb sky = sky_color(spec, p, rng);
  const Rgb grass = leaf_color(p, rng);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x)
      if (y < horizon) cv.paint(x, y, sky, ClassLabel::kSky);
      else cv.paint(x, y, grass, ClassLabel::kLeaves);

  // Crown geometry shrinks as the sky takes over the frame.
  const double shrink = std::clamp((1.0 - spec.sky_fraction) / 0.55, 0.35, 1.0);
  const double crown_cx = W * uniform(rng, 0.4, 0.6);
  const double crown_cy = std::min(horizon + H * uniform(rng, 0.0, 0.1) * shrink, H * 0.95);
  const double crown_rx = W * uniform(rng, 0.28, 0.38) * std::max(shrink, 0.6);
  const double crown_ry = H * uniform(rng, 0.22, 0.3) * shrink;

  // Trunk and branches.
  const int bark_j = uniform_int(rng, -p.bark_jitter, p.bark_jitter);
  const Rgb trunk = bark(p.trunk_r, p.trunk_g, p.trunk_b, bark_j);
  const Rgb branch = bark(p.branch_r, p.branch_g, p.branch_b, bark_j);
  const double trunk_hw = W * uniform(rng, 0.012, 0.022);
  cv.fill_region(crown_cx - trunk_hw, crown_cy, crown_cx + trunk_hw, H,
                 [&](double x, double y) { return std::abs(x - crown_cx) <= trunk_hw && y >= crown_cy; },
                 trunk, ClassLabel::kTrunkBranches);
  const int n_branches = uniform_int(rng, 3, 6);
  for (int i = 0; i < n_branches; ++i) {
    const double ang = uniform(rng, -std::numbers::pi, 0.0);
    const double len = uniform(rng, 0.5, 0.95);
    cv.segment(crown_cx, crown_cy, crown_cx + std::cos(ang) * crown_rx * len,
               crown_cy + std::sin(ang) * crown_ry * len, uniform(rng, 2.0, 4.0) * scale, branch,
               ClassLabel::kTrunkBranches);
  }

  // Foliage: many small leaf ellipses scattered over the crown.
  const double crown_area = std::numbers::pi * crown_rx * crown_ry;
  const double leaf_area = std::numbers::pi * 11.0 * 7.0 * scale * scale;
  const int n_leaves = static_cast<int>(1.6 * crown_area / leaf_area);
  for (int i = 0; i < n_leaves; ++i) {
    const double rad = std::sqrt(uniform(rng, 0.0, 1.0));
    const double th = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double lx = crown_cx + rad * crown_rx * std::cos(th);
    const double ly = crown_cy + rad * crown_ry * std::sin(th);
    const double a = uniform(rng, 6.0, 16.0) * scale;
    const double b = uniform(rng, 4.0, 10.0) * scale;
    cv.ellipse(lx, ly, a, b, uniform(rng, 0.0, std::numbers::pi), leaf_color(p, rng),
               ClassLabel::kLeaves);
  }

  // Apples: non-overlapping discs inside the crown and the frame.
  LabeledScene scene;
  for (int i = 0; i < spec.apple_count; ++i) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double r = uniform(rng, 0.045, 0.07) * std::min(W, H);
      const double rad = std::sqrt(uniform(rng, 0.0, 1.0)) * 0.8;
      const double th = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      const double ax = crown_cx + rad * crown_rx * std::cos(th);
      const double ay = crown_cy + rad * crown_ry * std::sin(th);
      if (ax - r < 1 || ay - r < 1 || ax + r > W - 2 || ay + r > H - 2) continue;
      const bool clash = std::any_of(scene.apples.begin(), scene.apples.end(), [&](const AppleGeometry& o) {
        return std::hypot(o.cx - ax, o.cy - ay) < o.radius + r + 2.0;
      });
      if (clash) continue;
      AppleGeometry g{ax, ay, r};
      cv.disc(ax, ay, r, apple_color(spec.variety, p, rng), ClassLabel::kApple);
      if (spec.glare) {
        g.glare = true;
        g.glare_radius = r * uniform(rng, 0.3, 0.45);
        g.glare_cx = ax - 0.3 * r;
        g.glare_cy = ay - 0.3 * r;
        cv.disc(g.glare_cx, g.glare_cy, g.glare_radius, glare_color(p, rng), ClassLabel::kApple, true);
      }
      scene.apples.push_back(g);
      break;
    }
  }

  if (spec.brightness == Brightness::kDark) {
    for (auto& v : cv.img.bytes())
      v = static_cast<std::uint8_t>(std::lround(v * p.dark_scale));
  }

  scene.clean = cv.img;
  scene.image = cv.img;
  if (spec.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (auto& v : scene.image.bytes())
      v = static_cast<std::uint8_t>(std::clamp(std::lround(v + noise(rng)), 0L, 255L));
  }
  scene.truth = std::move(cv.truth);
  scene.glare = std::move(cv.glare);
  scene.spec = spec;
  return scene;
}

SceneSpec dataset_scene_spec(const DatasetOptions& opts, int index, std::uint64_t seed) {
  SceneSpec s = opts.base;
  s.seed = detail::mix_seed(seed, static_cast<std::uint64_t>(index));
  Rng rng(detail::mix_seed(s.seed, 0xD47A));
  switch (opts.varieties) {
    case VarietyMix::kRed: s.variety = Variety::kRedDelicious; break;
    case VarietyMix::kGolden: s.variety = Variety::kGoldenDelicious; break;
    case VarietyMix::kAlternate:
      s.variety = index % 2 == 0 ? Variety::kRedDelicious : Variety::kGoldenDelicious;
      break;
  }
  switch (opts.skies) {
    case SkyMix::kBlue: s.sky = SkyMode::kBlueSky; break;
    case SkyMix::kCloudy: s.sky = SkyMode::kCloudySky; break;
    case SkyMix::kAlternate: s.sky = (index / 2) % 2 == 0 ? SkyMode::kBlueSky : SkyMode::kCloudySky; break;
  }
  s.apple_count = uniform_int(rng, std::min(opts.min_apples, opts.max_apples),
                              std::max(opts.min_apples, opts.max_apples));
  s.brightness = uniform(rng, 0.0, 1.0) < opts.dark_fraction ? Brightness::kDark : Brightness::kBright;
  s.glare = uniform(rng, 0.0, 1.0) < opts.glare_probability;
  if (opts.bottom_up) {
    s = bottom_up_preset(s);
  } else {
    s.sky_fraction = std::clamp(
        opts.base.sky_fraction + uniform(rng, -opts.sky_fraction_jitter, opts.sky_fraction_jitter), 0.0, 1.0);
  }
  return s;
}

namespace {

std::string scene_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return buf;
}

nlohmann::json meta_json(const LabeledScene& scene, int index) {
  const SceneSpec& s = scene.spec;
  nlohmann::json j;
  j["index"] = index;
  j["seed"] = s.seed;
  j["width"] = s.width;
  j["height"] = s.height;
  j["variety"] = to_string(s.variety);
  j["sky"] = to_string(s.sky);
  j["brightness"] = to_string(s.brightness);
  j["apple_count"] = s.apple_count;
  j["glare"] = s.glare;
  j["sky_fraction"] = s.sky_fraction;
  j["noise_sigma"] = s.noise_sigma;
  nlohmann::json apples = nlohmann::json::array();
  for (const AppleGeometry& a : scene.apples) {
    nlohmann::json ja{{"cx", a.cx}, {"cy", a.cy}, {"radius", a.radius}};
    if (a.glare)
      ja["glare"] = {{"cx", a.glare_cx}, {"cy", a.glare_cy}, {"radius", a.glare_radius}};
    apples.push_back(ja);
  }
  j["apples"] = apples;
  return j;
}

constexpr const char* kManifestHeader =
    "index,seed,image,truth,meta,width,height,variety,sky,brightness,apple_count,glare,"
    "sky_fraction,noise_sigma";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<ManifestEntry> gen_dataset(int n, const DatasetOptions& opts, std::uint64_t seed,
                                       const std::string& out_dir, int threads) {
  if (n < 1) throw Error(ErrorKind::kInvalidArgument, "dataset size must be >= 1");
  opts.base.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw Error(ErrorKind::kIo, "cannot create output directory: " + out_dir);

  std::vector<ManifestEntry> entries(n);
  detail::parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    const int idx = static_cast<int>(i);
    const LabeledScene scene = gen_scene(dataset_scene_spec(opts, idx, seed));
    const std::string stem = scene_stem(idx);
    ManifestEntry& e = entries[i];
    e.index = idx;
    e.image = stem + ".ppm";
    e.truth = stem + ".truth.pgm";
    e.meta = stem + ".meta.json";
    e.spec = scene.spec;
    const std::filesystem::path dir(out_dir);
    save_image(scene.image, (dir / e.image).string());
    save_image(scene.truth, (dir / e.truth).string());
    detail::write_file_atomic((dir / e.meta).string(), meta_json(scene, idx).dump(2) + "\n");
  });

  std::string manifest = std::string(kManifestHeader) + "\n";
  for (const ManifestEntry& e : entries) {
    const SceneSpec& s = e.spec;
    manifest += std::to_string(e.index) + "," + std::to_string(s.seed) + "," + e.image + "," +
                e.truth + "," + e.meta + "," + std::to_string(s.width) + "," +
                std::to_string(s.height) + "," + to_string(s.variety) + "," + to_string(s.sky) +
                "," + to_string(s.brightness) + "," + std::to_string(s.apple_count) + "," +
                (s.glare ? "1" : "0") + "," + detail::format_double(s.sky_fraction) + "," +
                detail::format_double(s.noise_sigma) + "\n";
  }
  detail::write_file_atomic((std::filesystem::path(out_dir) / "manifest.csv").string(), manifest);
  return entries;
}

std::vector<ManifestEntry> read_manifest(const std::string& dir) {
  const std::string path = (std::filesystem::path(dir) / "manifest.csv").string();
  std::istringstream in(detail::read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader)
    throw Error(ErrorKind::kFormat, path + ": unexpected manifest header");
  std::vector<ManifestEntry> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 14)
      throw Error(ErrorKind::kFormat, path + ":" + std::to_string(lineno) + ": expected 14 fields");
    try {
      ManifestEntry e;
      e.index = std::stoi(f[0]);
      e.spec.seed = std::stoull(f[1]);
      e.image = f[2];
      e.truth = f[3];
      e.meta = f[4];
      e.spec.width = std::stoi(f[5]);
      e.spec.height = std::stoi(f[6]);
      e.spec.variety = parse_variety(f[7]);
      e.spec.sky = parse_sky_mode(f[8]);
      if (f[9] != "bright" && f[9] != "dark") throw Error(ErrorKind::kFormat, "bad brightness");
      e.spec.brightness = f[9] == "dark" ? Brightness::kDark : Brightness::kBright;
      e.spec.apple_count = std::stoi(f[10]);
      e.spec.glare = f[11] == "1";
      e.spec.sky_fraction = detail::parse_double(f[12]);
      e.spec.noise_sigma = detail::parse_double(f[13]);
      out.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw Error(ErrorKind::kFormat,
                  path + ":" + std::to_string(lineno) + ": bad manifest row (" + ex.what() + ")");
    }
  }
  return out;
}

}  // namespace orchard
