#include "gcvit/metrics.hpp"

#include <fmt/format.h>

namespace gcvit {

ConfusionMatrix confusion_matrix(std::span<Index const> predictions, std::span<Index const> labels, Index num_classes,
                                 std::vector<std::string> class_names)
{
  if (predictions.size() != labels.size()) {
    throw DimensionError(fmt::format("confusion_matrix: {} predictions vs {} labels", predictions.size(), labels.size()));
  }
  if (num_classes < 1) { throw DimensionError("confusion_matrix: need at least one class"); }
  ConfusionMatrix m;
  m.counts = CountMatrix::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Index const t = labels[i];
    Index const p = predictions[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      throw DimensionError(fmt::format("confusion_matrix: sample {} has label {} / prediction {} outside [0, {})", i, t, p, num_classes));
    }
    ++m.counts(t, p);
  }
  class_names.resize(std::size_t(num_classes));
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    if (class_names[c].empty()) { class_names[c] = std::to_string(c); }
  }
  m.class_names = std::move(class_names);
  return m;
}

ClassificationReport report(ConfusionMatrix const &matrix)
{
  std::int64_t const total = matrix.total();
  if (total < 1) { throw DimensionError("report: confusion matrix has no samples"); }
  Index const n = matrix.num_classes();
  ClassificationReport r;
  r.class_names = matrix.class_names;
  r.total = total;
  r.accuracy = double(matrix.counts.trace()) / double(total);
  for (Index c = 0; c < n; ++c) {
    ClassMetrics m;
    auto const tp = double(matrix.counts(c, c));
    auto const predicted = double(matrix.counts.col(c).sum());
    m.support = matrix.support(c);
    if (predicted > 0) {
      m.precision = tp / predicted;
    } else {
      m.precision_undefined = true;
    }
    if (m.support > 0) {
      m.recall = tp / double(m.support);
    } else {
      m.recall_undefined = true;
    }
    if (m.precision + m.recall > 0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
      m.f1_undefined = true;
    }
    r.classes.push_back(m);
  }
  for (auto const &m : r.classes) {
    r.macro.precision += m.precision / double(n);
    r.macro.recall += m.recall / double(n);
    r.macro.f1 += m.f1 / double(n);
    double const w = double(m.support) / double(total);
    r.weighted.precision += w * m.precision;
    r.weighted.recall += w * m.recall;
    r.weighted.f1 += w * m.f1;
  }
  r.macro.support = r.weighted.support = total;
  return r;
}

PerClassAccuracy per_class_accuracy(ConfusionMatrix const &matrix)
{
  PerClassAccuracy out;
  for (Index c = 0; c < matrix.num_classes(); ++c) {
    std::int64_t const support = matrix.support(c);
    out.undefined.push_back(support == 0);
    out.accuracy.push_back(support == 0 ? 0.0 : double(matrix.counts(c, c)) / double(support));
  }
  return out;
}

} // namespace gcvit
