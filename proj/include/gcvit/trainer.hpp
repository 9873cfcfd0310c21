#pragma once

#include "gcvit/augment.hpp"
#include "gcvit/dataset.hpp"
#include "gcvit/model.hpp"
#include "gcvit/optimizer.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace gcvit {

enum class ScheduleKind
{
  Cosine,
  Step,
};

// Defaults follow the cat-breed fine-tuning recipe: batch 32, lr 1e-4 annealed to 0 over
// max_epochs, weight decay 1e-4, label smoothing 0.1, early-stopping patience 5.
struct TrainConfig
{
  std::int64_t batch_size = 32;
  std::int64_t max_epochs = 100;
  double lr_max = 1e-4;
  double lr_min = 0.0;
  double weight_decay = 1e-4;
  double label_smoothing = 0.1;
  std::int64_t patience = 5;
  std::uint64_t seed = 0;
  ScheduleKind schedule = ScheduleKind::Cosine;
  std::vector<double> milestones{30.0, 60.0, 90.0}; // step schedule only, in epochs
  double gamma = 0.1;                               // step schedule only

  void validate() const;
  // Learning rate used during the 0-based epoch `epoch`.
  double learning_rate(std::int64_t epoch) const;
};

void to_json(nlohmann::json &j, TrainConfig const &cfg);
void from_json(nlohmann::json const &j, TrainConfig &cfg);

struct EpochRecord
{
  std::int64_t epoch = 0; // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0; // running accuracy over the augmented training batches
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double learning_rate = 0.0;

  bool operator==(EpochRecord const &) const = default;
};

template <typename Scalar> struct TrainState
{
  GcVit<Scalar> model;
  AdamWState<Scalar> adam;
  std::int64_t epoch = 0; // completed epochs
  EarlyStopState early_stop;
};

template <typename Scalar> struct FitResult
{
  GcVit<Scalar> best_model;          // highest validation accuracy, earliest epoch on ties
  std::vector<EpochRecord> records;
  std::int64_t best_epoch = 0;       // 1-based, 0 when no epoch ran
  bool stopped_early = false;
  TrainState<Scalar> final_state;
};

using EpochCallback = std::function<void(EpochRecord const &)>;

// Mini-batch training: each epoch shuffles the training set with the seeded "shuffle" stream,
// augments every sample with a stream keyed by (epoch, sample index), averages the smoothed
// cross-entropy gradient over the batch (the last batch may be short) and takes one AdamW step
// at the scheduled rate. Validation uses preprocess_eval. Throws NumericalError naming the epoch
// and batch when a loss is not finite.
template <typename Scalar>
FitResult<Scalar> fit(GcVit<Scalar> model, std::vector<LabeledImage> const &train, std::vector<LabeledImage> const &val,
                      AugmentPolicy const &policy, TrainConfig const &cfg, EpochCallback const &on_epoch = {});

template <typename Scalar>
FitResult<Scalar> fit(GcVit<Scalar> model, DatasetManifest const &train, DatasetManifest const &val,
                      AugmentPolicy const &policy, TrainConfig const &cfg, EpochCallback const &on_epoch = {});

// Mean smoothed loss and accuracy on preprocess_eval'd images.
struct LossAccuracy
{
  double loss = 0.0;
  double accuracy = 0.0;
};

template <typename Scalar>
LossAccuracy evaluate_loss_accuracy(GcVit<Scalar> const &model, std::vector<ImageTensor> const &inputs,
                                    std::vector<Index> const &labels, double label_smoothing);

} // namespace gcvit
