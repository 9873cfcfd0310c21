#include "gcvit/evaluate.hpp"
#include "gcvit/synth.hpp"
#include "gcvit/trainer.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace gcvit;

namespace {

ModelConfig micro_config(Index classes)
{
  ModelConfig cfg;
  cfg.input_height = cfg.input_width = 16;
  cfg.patch_size = 4;
  cfg.stem_channels = 2;
  cfg.stage_depths = {1, 1};
  cfg.stage_dims = {8, 16};
  cfg.num_heads = {2, 2};
  cfg.mlp_ratio = 2;
  cfg.num_classes = classes;
  return cfg;
}

std::vector<LabeledImage> samples(Index classes, Index per_class, std::uint64_t seed)
{
  std::vector<LabeledImage> out;
  for (Index c = 0; c < classes; ++c) {
    for (Index i = 0; i < per_class; ++i) {
      out.push_back({synth_image(c, classes, 16, seed + std::uint64_t(100 * c + i)), c, fmt::format("c{}_{}", c, i)});
    }
  }
  return out;
}

TrainConfig quick_config(std::int64_t epochs)
{
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_epochs = epochs;
  cfg.lr_max = 3e-3;
  cfg.seed = 11;
  return cfg;
}

AugmentPolicy policy16()
{
  AugmentPolicy p;
  p.crop_size = 16;
  return p;
}

} // namespace

TEST(TrainConfig, ScheduleAndJson)
{
  TrainConfig cfg;
  cfg.max_epochs = 10;
  cfg.lr_max = 1e-3;
  EXPECT_EQ(cfg.learning_rate(0), 1e-3);
  EXPECT_LT(cfg.learning_rate(9), cfg.learning_rate(1));
  cfg.schedule = ScheduleKind::Step;
  cfg.milestones = {3, 6};
  EXPECT_EQ(cfg.learning_rate(2), 1e-3);
  EXPECT_NEAR(cfg.learning_rate(3), 1e-4, 1e-18);
  EXPECT_NEAR(cfg.learning_rate(7), 1e-5, 1e-18);
  TrainConfig const back = nlohmann::json(cfg).get<TrainConfig>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(cfg));
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Fit, ZeroEpochsReturnsInitialModel)
{
  auto const model = init_model<float>(micro_config(3), 1);
  auto const data = samples(3, 2, 1);
  FitResult<float> const r = fit(model, data, data, policy16(), quick_config(0));
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.best_epoch, 0);
  auto a = parameters(const_cast<GcVit<float> &>(model));
  auto b = parameters(const_cast<GcVit<float> &>(r.best_model));
  for (std::size_t i = 0; i < a.size(); ++i) { EXPECT_EQ(a[i].map(), b[i].map()); }
}

TEST(Fit, DeterministicRecords)
{
  auto const model = init_model<float>(micro_config(3), 2);
  auto const train = samples(3, 3, 1), val = samples(3, 1, 500);
  FitResult<float> const a = fit(model, train, val, policy16(), quick_config(3));
  FitResult<float> const b = fit(model, train, val, policy16(), quick_config(3));
  ASSERT_EQ(a.records.size(), 3u);
  EXPECT_EQ(a.records, b.records);
  auto pa = parameters(const_cast<GcVit<float> &>(a.final_state.model));
  auto pb = parameters(const_cast<GcVit<float> &>(b.final_state.model));
  for (std::size_t i = 0; i < pa.size(); ++i) { EXPECT_EQ(pa[i].map(), pb[i].map()); }
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].epoch, std::int64_t(i + 1));
    EXPECT_EQ(a.records[i].learning_rate, quick_config(3).learning_rate(std::int64_t(i)));
  }
}

TEST(Fit, EarlyStoppingBoundAndBestCheckpoint)
{
  auto const model = init_model<float>(micro_config(3), 3);
  auto const train = samples(3, 3, 1), val = samples(3, 2, 700);
  TrainConfig cfg = quick_config(30);
  cfg.patience = 2;
  FitResult<float> const r = fit(model, train, val, policy16(), cfg);
  ASSERT_GE(r.best_epoch, 1);
  EXPECT_LE(std::int64_t(r.records.size()), r.best_epoch + cfg.patience);
  if (r.stopped_early) { EXPECT_EQ(std::int64_t(r.records.size()), r.best_epoch + cfg.patience); }
  double best = 0.0;
  for (auto const &rec : r.records) { best = std::max(best, rec.val_accuracy); }
  EXPECT_EQ(r.records[std::size_t(r.best_epoch - 1)].val_accuracy, best);
  // the returned snapshot reproduces its recorded validation accuracy
  std::vector<ImageTensor> inputs;
  std::vector<Index> labels;
  for (auto const &s : val) {
    inputs.push_back(preprocess_eval(s.image, policy16()));
    labels.push_back(s.label);
  }
  LossAccuracy const re = evaluate_loss_accuracy(r.best_model, inputs, labels, cfg.label_smoothing);
  EXPECT_EQ(re.accuracy, best);
  EXPECT_EQ(re.loss, r.records[std::size_t(r.best_epoch - 1)].val_loss);
}

TEST(Fit, NonFiniteLossNamesTheBatch)
{
  auto model = init_model<float>(micro_config(3), 4);
  model.head.bias(1) = std::numeric_limits<float>::quiet_NaN();
  auto const data = samples(3, 2, 1);
  try {
    fit(model, data, data, policy16(), quick_config(2));
    FAIL() << "expected NumericalError";
  } catch (NumericalError const &e) {
    std::string const msg = e.what();
    EXPECT_NE(msg.find("epoch 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
  }
}

TEST(Fit, RejectsEmptyInputs)
{
  auto const model = init_model<float>(micro_config(3), 5);
  EXPECT_THROW(fit(model, {}, samples(3, 1, 1), policy16(), quick_config(1)), DatasetError);
}

TEST(Evaluate, ClassCountMismatch)
{
  auto const model = init_model<float>(micro_config(3), 6);
  auto const data = samples(2, 1, 1);
  EXPECT_THROW(evaluate(model, data, {"a", "b"}, policy16()), DatasetError);
  Evaluation<float> const ev = evaluate(model, samples(3, 2, 1), {"a", "b", "c"}, policy16());
  EXPECT_EQ(ev.matrix.total(), 6);
  EXPECT_EQ(ev.predictions.size(), 6u);
  Vector<float> const p = predict(model, data.front().image, policy16());
  EXPECT_NEAR(p.sum(), 1.0f, 1e-5f);
}
