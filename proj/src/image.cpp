#include "orchard/image.hpp"

#include <algorithm>
#include <cmath>

#include "orchard/error.hpp"

namespace orchard {

template class Plane<double>;
template class Plane<std::uint8_t>;
template class Plane<ClassLabel>;

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1)
    throw Error(ErrorKind::kInvalidArgument,
                "image dimensions must be at least 1x1, got " +
                    std::to_string(width) + "x" + std::to_string(height));
}

std::uint8_t quantize(double v) {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

}  // namespace

template <typename T>
Plane<T>::Plane(int width, int height, T fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

std::uint8_t gray_code(ClassLabel label) {
  switch (label) {
    case ClassLabel::kApple: return 255;
    case ClassLabel::kLeaves: return 180;
    case ClassLabel::kSky: return 60;
    case ClassLabel::kTrunkBranches: return 0;
  }
  return 0;
}

const char* class_name(ClassLabel label) {
  switch (label) {
    case ClassLabel::kApple: return "apple";
    case ClassLabel::kLeaves: return "leaves";
    case ClassLabel::kSky: return "sky";
    case ClassLabel::kTrunkBranches: return "trunk";
  }
  return "?";
}

ClassLabel class_from_name(const std::string& name) {
  for (ClassLabel c : kAllClasses)
    if (name == class_name(c)) return c;
  throw Error(ErrorKind::kFormat, "unknown class name: " + name);
}

GrayImage channel(const RgbImage& img, Channel which) {
  GrayImage out(img.width(), img.height());
  const auto src = img.bytes();
  const std::size_t off = static_cast<std::size_t>(which);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[i * 3 + off];
  return out;
}

GrayImage to_gray(const RgbImage& img) {
  GrayImage out(img.width(), img.height());
  const auto src = img.bytes();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.299 * src[i * 3] + 0.587 * src[i * 3 + 1] +
             0.114 * src[i * 3 + 2];
  }
  return out;
}

RgbImage resize(const RgbImage& img, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1)
    throw Error(ErrorKind::kInvalidArgument, "resize target must be >= 1x1");
  if (target_w == img.width() && target_h == img.height()) return img;

  const double sx = static_cast<double>(img.width()) / target_w;
  const double sy = static_cast<double>(img.height()) / target_h;

  struct Tap {
    int i0, i1;
    double w1;
  };
  auto taps = [](int n_out, int n_in, double scale) {
    std::vector<Tap> t(n_out);
    for (int o = 0; o < n_out; ++o) {
      double s = (o + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(n_in - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, n_in - 1);
      t[o] = {i0, i1, s - i0};
    }
    return t;
  };
  const auto xt = taps(target_w, img.width(), sx);
  const auto yt = taps(target_h, img.height(), sy);

  RgbImage out(target_w, target_h);
  auto dst = out.bytes();
  const auto src = img.bytes();
  const std::size_t stride = static_cast<std::size_t>(img.width()) * 3;
  for (int y = 0; y < target_h; ++y) {
    const Tap& ty = yt[y];
    for (int x = 0; x < target_w; ++x) {
      const Tap& tx = xt[x];
      for (int c = 0; c < 3; ++c) {
        auto px = [&](int yy, int xx) {
          return static_cast<double>(src[yy * stride + xx * 3 + c]);
        };
        const double top = px(ty.i0, tx.i0) * (1.0 - tx.w1) + px(ty.i0, tx.i1) * tx.w1;
        const double bot = px(ty.i1, tx.i0) * (1.0 - tx.w1) + px(ty.i1, tx.i1) * tx.w1;
        dst[(static_cast<std::size_t>(y) * target_w + x) * 3 + c] =
            quantize(top * (1.0 - ty.w1) + bot * ty.w1);
      }
    }
  }
  return out;
}

RowProfile row_profile(const RgbImage& img, int y) {
  if (y < 0 || y >= img.height())
    throw Error(ErrorKind::kInvalidArgument,
                "row " + std::to_string(y) + " out of range [0, " +
                    std::to_string(img.height()) + ")");
  RowProfile p;
  p.red.reserve(img.width());
  p.green.reserve(img.width());
  p.blue.reserve(img.width());
  for (int x = 0; x < img.width(); ++x) {
    const Rgb c = img.at(x, y);
    p.red.push_back(c.r);
    p.green.push_back(c.g);
    p.blue.push_back(c.b);
  }
  return p;
}

GrayImage render(const ClassMap& map) {
  GrayImage out(map.width(), map.height());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = gray_code(map[i]);
  return out;
}

GrayImage render(const BinaryMask& mask) {
  GrayImage out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 255.0 : 0.0;
  return out;
}

std::size_t count(const BinaryMask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.values().begin(), mask.values().end(),
                    [](std::uint8_t v) { return v != 0; }));
}

double density(const BinaryMask& mask) {
  return mask.size() == 0 ? 0.0
                          : static_cast<double>(count(mask)) / mask.size();
}

}  // namespace orchard
