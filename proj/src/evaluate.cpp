#include "gcvit/evaluate.hpp"

#include <fmt/format.h>

namespace gcvit {

template <typename Scalar>
Evaluation<Scalar> evaluate(GcVit<Scalar> const &model, std::vector<LabeledImage> const &samples,
                            std::vector<std::string> const &class_names, AugmentPolicy const &policy)
{
  Index const c = model.config.num_classes;
  if (Index(class_names.size()) != c) {
    throw DatasetError(fmt::format("evaluate: dataset has {} classes but the model predicts {}", class_names.size(), c));
  }
  Evaluation<Scalar> ev;
  for (auto const &s : samples) {
    try {
      Vector<Scalar> const logits = forward_logits(model, preprocess_eval(s.image, policy));
      Index best = 0;
      logits.maxCoeff(&best);
      ev.predictions.push_back(best);
      ev.labels.push_back(s.label);
    } catch (Error const &e) {
      throw Error(fmt::format("{}: {}", s.path.string(), e.what()));
    }
  }
  ev.matrix = confusion_matrix(ev.predictions, ev.labels, c, class_names);
  ev.report = report(ev.matrix);
  return ev;
}

template <typename Scalar>
Evaluation<Scalar> evaluate(GcVit<Scalar> const &model, DatasetManifest const &manifest, AugmentPolicy const &policy)
{
  if (manifest.num_classes() != model.config.num_classes) {
    throw DatasetError(fmt::format("evaluate: manifest has {} classes but the model predicts {}", manifest.num_classes(),
                                   model.config.num_classes));
  }
  std::vector<LabeledImage> samples;
  for (auto const &e : manifest.entries) {
    try {
      samples.push_back({read_ppm(e.path), e.class_id, e.path});
    } catch (IoError const &err) {
      throw IoError(fmt::format("evaluate: {}", err.what()));
    }
  }
  return evaluate(model, samples, manifest.class_names, policy);
}

template <typename Scalar>
Vector<Scalar> predict(GcVit<Scalar> const &model, ImageTensor const &image, AugmentPolicy const &policy)
{
  return forward(model, preprocess_eval(image, policy));
}

#define GCVIT_INSTANTIATE(Scalar)                                                                                      \
  template Evaluation<Scalar> evaluate(GcVit<Scalar> const &, std::vector<LabeledImage> const &,                       \
                                       std::vector<std::string> const &, AugmentPolicy const &);                        \
  template Evaluation<Scalar> evaluate(GcVit<Scalar> const &, DatasetManifest const &, AugmentPolicy const &);         \
  template Vector<Scalar> predict(GcVit<Scalar> const &, ImageTensor const &, AugmentPolicy const &);

GCVIT_INSTANTIATE(float)
GCVIT_INSTANTIATE(double)

#undef GCVIT_INSTANTIATE

} // namespace gcvit
