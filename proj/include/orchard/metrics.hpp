#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "orchard/image.hpp"

namespace orchard {

/// 4x4 pixel counts, rows = truth class, columns = predicted class.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, 4>, 4> counts{};

  std::uint64_t total() const;
  double accuracy() const;
  double precision(ClassLabel label) const;
  double recall(ClassLabel label) const;
  double f1(ClassLabel label) const;  // 0 when precision + recall is 0

  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
};

ConfusionMatrix confusion(const ClassMap& truth, const ClassMap& predicted);

/// Fixed-width table plus per-class precision / recall / F1 lines.
std::string format_confusion(const ConfusionMatrix& cm);

}  // namespace orchard
