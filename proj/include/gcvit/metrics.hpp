#pragma once

#include "gcvit/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gcvit {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix
{
  CountMatrix counts;
  std::vector<std::string> class_names;

  Index num_classes() const { return counts.rows(); }
  std::int64_t total() const { return counts.sum(); }
  std::int64_t support(Index c) const { return counts.row(c).sum(); }

  bool operator==(ConfusionMatrix const &) const = default;
};

// Throws DimensionError on a length mismatch or an index outside [0, C). Missing class names are
// filled with the class index.
ConfusionMatrix confusion_matrix(std::span<Index const> predictions, std::span<Index const> labels, Index num_classes,
                                 std::vector<std::string> class_names = {});

struct ClassMetrics
{
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
  // set when the corresponding ratio had a zero denominator and was reported as 0
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct ClassificationReport
{
  std::vector<std::string> class_names;
  std::vector<ClassMetrics> classes;
  double accuracy = 0.0;
  ClassMetrics macro;    // unweighted mean over classes
  ClassMetrics weighted; // support-weighted mean
  std::int64_t total = 0;
};

// Per-class precision/recall/F1 and the accuracy / macro / weighted footer. Throws on an empty
// matrix.
ClassificationReport report(ConfusionMatrix const &matrix);

struct PerClassAccuracy
{
  std::vector<double> accuracy;
  std::vector<bool> undefined; // zero-support classes, reported as 0
};

// counts[c][c] / support_c, i.e. per-class recall.
PerClassAccuracy per_class_accuracy(ConfusionMatrix const &matrix);

} // namespace gcvit
