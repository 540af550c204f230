#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace orchard {

enum class Channel { kRed = 0, kGreen = 1, kBlue = 2 };

/// The four scene classes. The enumerator order is the canonical class
/// order used for feature rows and reports.
enum class ClassLabel : std::uint8_t {
  kApple = 0,
  kLeaves = 1,
  kSky = 2,
  kTrunkBranches = 3,
};

inline constexpr std::array<ClassLabel, 4> kAllClasses = {
    ClassLabel::kApple, ClassLabel::kLeaves, ClassLabel::kSky,
    ClassLabel::kTrunkBranches};

/// Constant gray code each class is rendered with: 255/180/60/0.
std::uint8_t gray_code(ClassLabel label);
const char* class_name(ClassLabel label);
ClassLabel class_from_name(const std::string& name);

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

/// 8-bit, 3-channel raster, row-major, interleaved RGB.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return data_.size() / 3; }

  Rgb at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = index(x, y);
    data_[i] = c.r;
    data_[i + 1] = c.g;
    data_[i + 2] = c.b;
  }
  std::uint8_t channel_at(int x, int y, Channel c) const {
    return data_[index(x, y) + static_cast<std::size_t>(c)];
  }

  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> bytes() { return data_; }

  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel row-major raster with value type T.
template <typename T>
class Plane {
 public:
  using value_type = T;

  Plane() = default;
  Plane(int width, int height, T fill = T{});

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  T at(int x, int y) const { return data_[index(x, y)]; }
  T& at(int x, int y) { return data_[index(x, y)]; }
  T operator[](std::size_t i) const { return data_[i]; }
  T& operator[](std::size_t i) { return data_[i]; }

  std::span<const T> values() const { return data_; }
  std::span<T> values() { return data_; }

  bool same_shape(int w, int h) const { return w == width_ && h == height_; }
  template <typename U>
  bool same_shape(const Plane<U>& o) const {
    return same_shape(o.width(), o.height());
  }

  bool operator==(const Plane&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Double-precision intensities, nominal range [0, 255].
using GrayImage = Plane<double>;
/// 1 = class member, 0 = background.
using BinaryMask = Plane<std::uint8_t>;
/// Per-pixel class partition.
using ClassMap = Plane<ClassLabel>;

extern template class Plane<double>;
extern template class Plane<std::uint8_t>;
extern template class Plane<ClassLabel>;

struct RowProfile {
  std::vector<std::uint8_t> red;
  std::vector<std::uint8_t> green;
  std::vector<std::uint8_t> blue;
};

GrayImage channel(const RgbImage& img, Channel which);

/// Host image: Rec.601 luma, 0.299 R + 0.587 G + 0.114 B.
GrayImage to_gray(const RgbImage& img);

/// Bilinear resize with pixel-center alignment; same-size input is returned
/// unchanged.
RgbImage resize(const RgbImage& img, int target_w, int target_h);

RowProfile row_profile(const RgbImage& img, int y);

/// Renders a class map with its gray codes.
GrayImage render(const ClassMap& map);

/// Mask as 0/255 gray raster.
GrayImage render(const BinaryMask& mask);

std::size_t count(const BinaryMask& mask);
double density(const BinaryMask& mask);

// Raster I/O: binary PPM (P6) for color, binary PGM (P5) for gray and class
// rasters, maxval 255 only.

RgbImage load_image(const std::string& path);
GrayImage load_gray(const std::string& path);
ClassMap load_class_map(const std::string& path);

void save_image(const RgbImage& img, const std::string& path);
/// Values are rounded to nearest and clamped into [0, 255].
void save_image(const GrayImage& img, const std::string& path);
void save_image(const ClassMap& map, const std::string& path);
void save_image(const BinaryMask& mask, const std::string& path);

}  // namespace orchard
