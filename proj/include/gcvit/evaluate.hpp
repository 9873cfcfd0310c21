#pragma once

#include "gcvit/augment.hpp"
#include "gcvit/dataset.hpp"
#include "gcvit/metrics.hpp"
#include "gcvit/model.hpp"

#include <vector>

namespace gcvit {

template <typename Scalar> struct Evaluation
{
  ConfusionMatrix matrix;
  ClassificationReport report;
  std::vector<Index> predictions;
  std::vector<Index> labels;
};

// preprocess_eval + forward + argmax for every image. Throws DatasetError when the class count
// does not match the model; decode and forward errors are rethrown naming the sample.
template <typename Scalar>
Evaluation<Scalar> evaluate(GcVit<Scalar> const &model, std::vector<LabeledImage> const &samples,
                            std::vector<std::string> const &class_names, AugmentPolicy const &policy);

template <typename Scalar>
Evaluation<Scalar> evaluate(GcVit<Scalar> const &model, DatasetManifest const &manifest, AugmentPolicy const &policy);

// Class probabilities for one raw image.
template <typename Scalar>
Vector<Scalar> predict(GcVit<Scalar> const &model, ImageTensor const &image, AugmentPolicy const &policy);

} // namespace gcvit
