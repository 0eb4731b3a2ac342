#include "ulvm/metrics.hpp"

namespace ulvm::metrics {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) noexcept {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion(const Tensor& pred, const Tensor& truth, float threshold) {
  require_same_shape(pred, truth, "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] >= threshold;
    const bool t = truth[i] != 0.0f;
    if (p && t) ++c.tp;
    else if (!p && !t) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  return c;
}

namespace {
double ratio(std::uint64_t num, std::uint64_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

double dsc(const ConfusionCounts& c) {
  const std::uint64_t den = 2 * c.tp + c.fp + c.fn;
  return den == 0 ? 1.0 : ratio(2 * c.tp, den);
}

double se(const ConfusionCounts& c) {
  const std::uint64_t den = c.tp + c.fn;
  if (den == 0) return c.fp == 0 ? 1.0 : 0.0;
  return ratio(c.tp, den);
}

double sp(const ConfusionCounts& c) {
  const std::uint64_t den = c.tn + c.fp;
  if (den == 0) return c.fn == 0 ? 1.0 : 0.0;
  return ratio(c.tn, den);
}

double acc(const ConfusionCounts& c) {
  return c.total() == 0 ? 1.0 : ratio(c.tp + c.tn, c.total());
}

}  // namespace ulvm::metrics
