// Binary PPM/PGM reader and writer (P6/P5, maxval 255).

#include <cctype>
#include <cmath>
#include <string>
#include <string_view>

#include "file_util.hpp"
#include "orchard/error.hpp"
#include "orchard/image.hpp"

namespace orchard {
namespace {

struct PnmHeader {
  char kind = 0;  // '5' or '6'
  int width = 0;
  int height = 0;
  std::size_t data_offset = 0;
};

class HeaderReader {
 public:
  HeaderReader(std::string_view buf, const std::string& path)
      : buf_(buf), path_(path) {}

  PnmHeader parse() {
    if (buf_.size() < 2 || buf_[0] != 'P' || (buf_[1] != '5' && buf_[1] != '6'))
      fail("bad magic, expected P5 or P6");
    PnmHeader h;
    h.kind = buf_[1];
    pos_ = 2;
    h.width = next_int("width");
    h.height = next_int("height");
    const int maxval = next_int("maxval");
    if (h.width < 1 || h.height < 1) fail("non-positive dimensions");
    if (maxval != 255) fail("unsupported maxval " + std::to_string(maxval));
    // Exactly one whitespace byte separates the header from the raster.
    if (pos_ >= buf_.size() || !std::isspace(static_cast<unsigned char>(buf_[pos_])))
      fail("missing whitespace after maxval");
    h.data_offset = pos_ + 1;
    return h;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::kFormat, path_ + ": malformed header: " + msg);
  }

  void skip_space_and_comments() {
    while (pos_ < buf_.size()) {
      const char c = buf_[pos_];
      if (c == '#') {
        while (pos_ < buf_.size() && buf_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int next_int(const char* field) {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < buf_.size() && std::isdigit(static_cast<unsigned char>(buf_[pos_]))) {
      value = value * 10 + (buf_[pos_] - '0');
      if (value > 1'000'000) fail(std::string(field) + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) fail(std::string("expected ") + field);
    return static_cast<int>(value);
  }

  std::string_view buf_;
  const std::string& path_;
  std::size_t pos_ = 0;
};

struct RawRaster {
  PnmHeader header;
  std::string bytes;
};

RawRaster read_raster(const std::string& path, char expected_kind) {
  RawRaster r;
  r.bytes = detail::read_file(path);
  r.header = HeaderReader(r.bytes, path).parse();
  if (expected_kind != 0 && r.header.kind != expected_kind)
    throw Error(ErrorKind::kFormat,
                path + ": expected P" + std::string(1, expected_kind) +
                    " raster, found P" + std::string(1, r.header.kind));
  const std::size_t channels = r.header.kind == '6' ? 3 : 1;
  const std::size_t need = static_cast<std::size_t>(r.header.width) *
                           r.header.height * channels;
  if (r.bytes.size() - r.header.data_offset < need)
    throw Error(ErrorKind::kTruncated,
                path + ": pixel data truncated (" +
                    std::to_string(r.bytes.size() - r.header.data_offset) +
                    " of " + std::to_string(need) + " bytes)");
  return r;
}

std::string header(char kind, int w, int h) {
  return "P" + std::string(1, kind) + "\n" + std::to_string(w) + " " +
         std::to_string(h) + "\n255\n";
}

std::uint8_t quantize(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

}  // namespace

RgbImage load_image(const std::string& path) {
  const RawRaster r = read_raster(path, 0);
  RgbImage img(r.header.width, r.header.height);
  auto dst = img.bytes();
  const auto* src = reinterpret_cast<const std::uint8_t*>(r.bytes.data() + r.header.data_offset);
  if (r.header.kind == '6') {
    std::copy(src, src + dst.size(), dst.begin());
  } else {
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
      dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  }
  return img;
}

GrayImage load_gray(const std::string& path) {
  const RawRaster r = read_raster(path, '5');
  GrayImage img(r.header.width, r.header.height);
  const auto* src = reinterpret_cast<const std::uint8_t*>(r.bytes.data() + r.header.data_offset);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = src[i];
  return img;
}

ClassMap load_class_map(const std::string& path) {
  const RawRaster r = read_raster(path, '5');
  ClassMap map(r.header.width, r.header.height);
  const auto* src = reinterpret_cast<const std::uint8_t*>(r.bytes.data() + r.header.data_offset);
  for (std::size_t i = 0; i < map.size(); ++i) {
    switch (src[i]) {
      case 255: map[i] = ClassLabel::kApple; break;
      case 180: map[i] = ClassLabel::kLeaves; break;
      case 60: map[i] = ClassLabel::kSky; break;
      case 0: map[i] = ClassLabel::kTrunkBranches; break;
      default:
        throw Error(ErrorKind::kFormat,
                    path + ": gray value " + std::to_string(src[i]) +
                        " is not a class code");
    }
  }
  return map;
}

void save_image(const RgbImage& img, const std::string& path) {
  std::string out = header('6', img.width(), img.height());
  const auto b = img.bytes();
  out.append(reinterpret_cast<const char*>(b.data()), b.size());
  detail::write_file_atomic(path, out);
}

void save_image(const GrayImage& img, const std::string& path) {
  std::string out = header('5', img.width(), img.height());
  out.reserve(out.size() + img.size());
  for (double v : img.values()) out.push_back(static_cast<char>(quantize(v)));
  detail::write_file_atomic(path, out);
}

void save_image(const ClassMap& map, const std::string& path) {
  save_image(render(map), path);
}

void save_image(const BinaryMask& mask, const std::string& path) {
  save_image(render(mask), path);
}

}  // namespace orchard
