#include "orchard/metrics.hpp"

#include <cstdio>

#include "orchard/error.hpp"

namespace orchard {
namespace {

std::size_t idx(ClassLabel l) { return static_cast<std::size_t>(l); }

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

double ConfusionMatrix::accuracy() const {
  std::uint64_t diag = 0;
  for (std::size_t i = 0; i < 4; ++i) diag += counts[i][i];
  return ratio(diag, total());
}

double ConfusionMatrix::precision(ClassLabel label) const {
  std::uint64_t col = 0;
  for (std::size_t t = 0; t < 4; ++t) col += counts[t][idx(label)];
  return ratio(counts[idx(label)][idx(label)], col);
}

double ConfusionMatrix::recall(ClassLabel label) const {
  std::uint64_t row = 0;
  for (auto c : counts[idx(label)]) row += c;
  return ratio(counts[idx(label)][idx(label)], row);
}

double ConfusionMatrix::f1(ClassLabel label) const {
  const double p = precision(label), r = recall(label);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) counts[i][j] += o.counts[i][j];
  return *this;
}

ConfusionMatrix confusion(const ClassMap& truth, const ClassMap& predicted) {
  if (!truth.same_shape(predicted))
    throw Error(ErrorKind::kDimensionMismatch, "truth and prediction sizes differ");
  ConfusionMatrix cm;
  const auto& t = truth.values();
  const auto& p = predicted.values();
  for (std::size_t i = 0; i < t.size(); ++i) ++cm.counts[idx(t[i])][idx(p[i])];
  return cm;
}

std::string format_confusion(const ConfusionMatrix& cm) {
  std::string out = "confusion (rows truth, columns predicted)\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %10s %10s %10s %10s\n", "", "apple", "leaves", "sky", "trunk");
  out += buf;
  for (ClassLabel t : kAllClasses) {
    const auto& r = cm.counts[idx(t)];
    std::snprintf(buf, sizeof buf, "%-8s %10llu %10llu %10llu %10llu\n", class_name(t),
                  static_cast<unsigned long long>(r[0]), static_cast<unsigned long long>(r[1]),
                  static_cast<unsigned long long>(r[2]), static_cast<unsigned long long>(r[3]));
    out += buf;
  }
  for (ClassLabel l : kAllClasses) {
    std::snprintf(buf, sizeof buf, "%s precision=%.6f recall=%.6f f1=%.6f\n", class_name(l),
                  cm.precision(l), cm.recall(l), cm.f1(l));
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "pixel_accuracy=%.6f\n", cm.accuracy());
  out += buf;
  return out;
}

}  // namespace orchard
