#pragma once

#include <cstdint>

#include "ulvm/tensor.hpp"

namespace ulvm::metrics {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept;
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Binarizes `pred` at `threshold` (values >= threshold are positive) and
/// tallies it against `truth` (non-zero is positive). Shapes must match.
ConfusionCounts confusion(const Tensor& pred, const Tensor& truth, float threshold = 0.5f);

// Zero denominators mean the relevant ground-truth class is empty. The
// metric is then 1 if the prediction agrees (no spurious positives or
// negatives) and 0 otherwise.
double dsc(const ConfusionCounts& c);  // 2TP / (2TP + FP + FN)
double se(const ConfusionCounts& c);   // TP / (TP + FN)
double sp(const ConfusionCounts& c);   // TN / (TN + FP)
double acc(const ConfusionCounts& c);  // (TP + TN) / total

}  // namespace ulvm::metrics
