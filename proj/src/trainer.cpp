#include "gcvit/trainer.hpp"

#include "gcvit/loss.hpp"
#include "gcvit/random.hpp"
#include "gcvit/schedule.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace gcvit {

void TrainConfig::validate() const
{
  if (batch_size < 1) { throw ConfigError("batch_size must be at least 1"); }
  if (max_epochs < 0) { throw ConfigError("max_epochs must be non-negative"); }
  if (!(lr_min >= 0.0 && lr_min <= lr_max)) { throw ConfigError("learning rates must satisfy 0 <= lr_min <= lr_max"); }
  if (!(weight_decay >= 0.0)) { throw ConfigError("weight_decay must be non-negative"); }
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) { throw ConfigError("label_smoothing must lie in [0, 1)"); }
  if (patience < 1) { throw ConfigError("patience must be at least 1"); }
  if (!std::is_sorted(milestones.begin(), milestones.end())) { throw ConfigError("milestones must be sorted ascending"); }
  if (!(gamma > 0.0)) { throw ConfigError("gamma must be positive"); }
}

double TrainConfig::learning_rate(std::int64_t epoch) const
{
  if (schedule == ScheduleKind::Step) { return step_lr(double(epoch), milestones, gamma, lr_max); }
  return cosine_lr(double(epoch), double(std::max<std::int64_t>(max_epochs, 1)), lr_min, lr_max);
}

void to_json(nlohmann::json &j, TrainConfig const &cfg)
{
  j = nlohmann::json{{"batch_size", cfg.batch_size},
                     {"max_epochs", cfg.max_epochs},
                     {"lr_max", cfg.lr_max},
                     {"lr_min", cfg.lr_min},
                     {"weight_decay", cfg.weight_decay},
                     {"label_smoothing", cfg.label_smoothing},
                     {"patience", cfg.patience},
                     {"seed", cfg.seed},
                     {"schedule", cfg.schedule == ScheduleKind::Cosine ? "cosine" : "step"},
                     {"milestones", cfg.milestones},
                     {"gamma", cfg.gamma}};
}

void from_json(nlohmann::json const &j, TrainConfig &cfg)
{
  j.at("batch_size").get_to(cfg.batch_size);
  j.at("max_epochs").get_to(cfg.max_epochs);
  j.at("lr_max").get_to(cfg.lr_max);
  j.at("lr_min").get_to(cfg.lr_min);
  j.at("weight_decay").get_to(cfg.weight_decay);
  j.at("label_smoothing").get_to(cfg.label_smoothing);
  j.at("patience").get_to(cfg.patience);
  j.at("seed").get_to(cfg.seed);
  cfg.schedule = j.at("schedule").get<std::string>() == "step" ? ScheduleKind::Step : ScheduleKind::Cosine;
  j.at("milestones").get_to(cfg.milestones);
  j.at("gamma").get_to(cfg.gamma);
}

namespace {

template <typename Scalar> Index argmax(Vector<Scalar> const &v)
{
  Index i = 0;
  v.maxCoeff(&i);
  return i;
}

} // namespace

template <typename Scalar>
LossAccuracy evaluate_loss_accuracy(GcVit<Scalar> const &model, std::vector<ImageTensor> const &inputs,
                                    std::vector<Index> const &labels, double label_smoothing)
{
  LossAccuracy r;
  if (inputs.empty()) { return r; }
  double loss = 0.0;
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Vector<Scalar> const logits = forward_logits(model, inputs[i]);
    loss += double(smoothed_cross_entropy(logits, labels[i], label_smoothing));
    correct += argmax(logits) == labels[i] ? 1 : 0;
  }
  r.loss = loss / double(inputs.size());
  r.accuracy = double(correct) / double(inputs.size());
  return r;
}

template <typename Scalar>
FitResult<Scalar> fit(GcVit<Scalar> model, std::vector<LabeledImage> const &train, std::vector<LabeledImage> const &val,
                      AugmentPolicy const &policy, TrainConfig const &cfg, EpochCallback const &on_epoch)
{
  cfg.validate();
  policy.validate();
  if (train.empty() || val.empty()) { throw DatasetError("fit: training and validation sets must be non-empty"); }
  if (policy.crop_size != model.config.input_height || policy.crop_size != model.config.input_width) {
    throw ConfigError(fmt::format("fit: crop_size {} does not match model input {}x{}", policy.crop_size,
                                  model.config.input_height, model.config.input_width));
  }
  for (auto const *set : {&train, &val}) {
    for (auto const &s : *set) {
      if (s.label < 0 || s.label >= model.config.num_classes) {
        throw DatasetError(fmt::format("fit: {} has label {} outside the model's {} classes", s.path.string(), s.label,
                                       model.config.num_classes));
      }
    }
  }

  std::vector<ImageTensor> val_inputs;
  std::vector<Index> val_labels;
  for (auto const &s : val) {
    val_inputs.push_back(preprocess_eval(s.image, policy));
    val_labels.push_back(s.label);
  }

  FitResult<Scalar> result;
  TrainState<Scalar> state;
  state.model = std::move(model);
  auto const params = parameters(state.model);
  state.adam = init_adamw(params);
  result.best_model = state.model;

  AdamWConfig const adam_cfg{.weight_decay = cfg.weight_decay};
  auto const batch = std::size_t(cfg.batch_size);

  for (std::int64_t e = 0; e < cfg.max_epochs; ++e) {
    double const lr = cfg.learning_rate(e);
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) { order[i] = i; }
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", std::uint64_t(e)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::int64_t correct = 0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      std::size_t const stop = std::min(order.size(), start + batch);
      auto const scale = Scalar(1) / Scalar(stop - start);
      GcVit<Scalar> grads = zeros_like(state.model);
      for (std::size_t k = start; k < stop; ++k) {
        std::size_t const i = order[k];
        Rng aug_rng(derive_seed(cfg.seed, "augment", std::uint64_t(e), std::uint64_t(i)));
        ImageTensor const input = preprocess_train(train[i].image, policy, aug_rng);
        ForwardCache<Scalar> cache;
        Vector<Scalar> logits;
        Scalar loss;
        try {
          logits = forward_logits(state.model, input, &cache);
          loss = smoothed_cross_entropy(logits, train[i].label, cfg.label_smoothing);
        } catch (NumericalError const &err) {
          throw NumericalError(fmt::format("epoch {} batch {} ({}): {}", e + 1, b, train[i].path.string(), err.what()));
        }
        if (!std::isfinite(double(loss))) {
          throw NumericalError(fmt::format("epoch {} batch {} ({}): non-finite loss", e + 1, b, train[i].path.string()));
        }
        loss_sum += double(loss);
        correct += argmax(logits) == train[i].label ? 1 : 0;
        Vector<Scalar> const dlogits = scale * smoothed_cross_entropy_backward(logits, train[i].label, cfg.label_smoothing);
        backward(state.model, cache, dlogits, grads);
      }
      try {
        adamw_step(params, parameters(grads), state.adam, lr, adam_cfg);
      } catch (NumericalError const &err) {
        throw NumericalError(fmt::format("epoch {} batch {}: {}", e + 1, b, err.what()));
      }
    }

    LossAccuracy const v = evaluate_loss_accuracy(state.model, val_inputs, val_labels, cfg.label_smoothing);
    EpochRecord rec;
    rec.epoch = e + 1;
    rec.train_loss = loss_sum / double(train.size());
    rec.train_accuracy = double(correct) / double(train.size());
    rec.val_loss = v.loss;
    rec.val_accuracy = v.accuracy;
    rec.learning_rate = lr;
    result.records.push_back(rec);
    state.epoch = e + 1;

    EarlyStopDecision const d = early_stop_update(state.early_stop, v.accuracy, e + 1, cfg.patience);
    if (d.improved) {
      result.best_model = state.model;
      result.best_epoch = e + 1;
    }
    if (on_epoch) { on_epoch(rec); }
    if (d.should_stop) {
      result.stopped_early = e + 1 < cfg.max_epochs;
      break;
    }
  }
  result.final_state = std::move(state);
  return result;
}

template <typename Scalar>
FitResult<Scalar> fit(GcVit<Scalar> model, DatasetManifest const &train, DatasetManifest const &val,
                      AugmentPolicy const &policy, TrainConfig const &cfg, EpochCallback const &on_epoch)
{
  if (train.entries.empty() || val.entries.empty()) {
    throw DatasetError("fit: training and validation manifests must be non-empty");
  }
  return fit(std::move(model), load_images(train), load_images(val), policy, cfg, on_epoch);
}

#define GCVIT_INSTANTIATE(Scalar)                                                                                      \
  template FitResult<Scalar> fit(GcVit<Scalar>, std::vector<LabeledImage> const &, std::vector<LabeledImage> const &,  \
                                 AugmentPolicy const &, TrainConfig const &, EpochCallback const &);                   \
  template FitResult<Scalar> fit(GcVit<Scalar>, DatasetManifest const &, DatasetManifest const &,                      \
                                 AugmentPolicy const &, TrainConfig const &, EpochCallback const &);                   \
  template LossAccuracy evaluate_loss_accuracy(GcVit<Scalar> const &, std::vector<ImageTensor> const &,                \
                                               std::vector<Index> const &, double);

GCVIT_INSTANTIATE(float)
GCVIT_INSTANTIATE(double)

#undef GCVIT_INSTANTIATE

} // namespace gcvit
