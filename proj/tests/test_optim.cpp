#include "gcvit/optimizer.hpp"
#include "gcvit/schedule.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace gcvit;

namespace {

std::vector<ParamRef<double>> scalar_ref(double &x, char const *name = "theta") { return {{name, &x, 1, 1}}; }

} // namespace

TEST(Schedule, CosineClosedForm)
{
  double const lo = 1e-6, hi = 1e-3, total = 100;
  EXPECT_EQ(cosine_lr(0, total, lo, hi), hi);
  EXPECT_EQ(cosine_lr(total, total, lo, hi), lo);
  EXPECT_NEAR(cosine_lr(25, total, lo, hi), 0.0008536998372026805, 1e-15);
  EXPECT_NEAR(cosine_lr(50, total, lo, hi), 0.0005005000000000001, 1e-15);
  EXPECT_NEAR(cosine_lr(75, total, lo, hi), 0.00014730016279731955, 1e-15);
}

TEST(Schedule, CosineMonotoneAndBounded)
{
  for (double total : {1.0, 7.0, 100.0}) {
    double prev = cosine_lr(0, total, 0.0, 1e-4);
    for (int i = 1; i <= 1000; ++i) {
      double const lr = cosine_lr(total * i / 1000.0, total, 0.0, 1e-4);
      EXPECT_LE(lr, prev);
      EXPECT_GE(lr, 0.0);
      prev = lr;
    }
  }
  EXPECT_THROW(cosine_lr(-1, 10, 0, 1), ConfigError);
  EXPECT_THROW(cosine_lr(11, 10, 0, 1), ConfigError);
}

TEST(Schedule, StepDecay)
{
  std::vector<double> const ms{30, 60, 90};
  EXPECT_DOUBLE_EQ(step_lr(0, ms, 0.1, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(step_lr(29, ms, 0.1, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(step_lr(30, ms, 0.1, 1.0), 0.1);
  EXPECT_NEAR(step_lr(60, ms, 0.1, 1.0), 0.01, 1e-15);
  EXPECT_NEAR(step_lr(95, ms, 0.1, 1.0), 0.001, 1e-15);
  EXPECT_DOUBLE_EQ(step_lr(5, {}, 0.1, 2.0), 2.0);
  EXPECT_THROW(step_lr(5, {60, 30}, 0.1, 1.0), ConfigError);
}

TEST(AdamW, SingleStepOracle)
{
  double theta = 0.5, grad = 1.0;
  auto p = scalar_ref(theta);
  auto g = scalar_ref(grad);
  auto state = init_adamw(p);
  adamw_step(p, g, state, 0.1, AdamWConfig{0.9, 0.999, 1e-8, 0.01});
  EXPECT_NEAR(theta, 0.39950000099999994, 1e-15);
  EXPECT_NEAR(state.m[0](0, 0), 0.1, 1e-15);
  EXPECT_NEAR(state.v[0](0, 0), 0.001, 1e-15);
  EXPECT_EQ(state.step, 1);
  grad = -0.5;
  adamw_step(p, g, state, 0.1, AdamWConfig{0.9, 0.999, 1e-8, 0.01});
  EXPECT_NEAR(theta, 0.3724667973699031, 1e-14);
}

TEST(AdamW, ZeroGradient)
{
  double theta = 2.0, grad = 0.0;
  auto p = scalar_ref(theta);
  auto g = scalar_ref(grad);
  auto state = init_adamw(p);
  adamw_step(p, g, state, 0.1, AdamWConfig{0.9, 0.999, 1e-8, 0.0});
  EXPECT_EQ(theta, 2.0);
  adamw_step(p, g, state, 0.1, AdamWConfig{0.9, 0.999, 1e-8, 0.5});
  EXPECT_DOUBLE_EQ(theta, 2.0 * (1.0 - 0.1 * 0.5));
}

TEST(AdamW, ConvergesOnQuadratic)
{
  double theta = -4.0, grad = 0.0;
  auto p = scalar_ref(theta);
  auto g = scalar_ref(grad);
  auto state = init_adamw(p);
  int steps = 0;
  for (; steps < 5000; ++steps) {
    grad = 2.0 * (theta - 3.0);
    adamw_step(p, g, state, 1e-2, AdamWConfig{0.9, 0.999, 1e-8, 0.0});
  }
  EXPECT_NEAR(theta, 3.0, 1e-3);
}

TEST(AdamW, NonFiniteGradientLeavesStateUntouched)
{
  double a = 1.0, b = 2.0, ga = 0.5, gb = std::nan("");
  std::vector<ParamRef<double>> p{{"a", &a, 1, 1}, {"b", &b, 1, 1}};
  std::vector<ParamRef<double>> g{{"a", &ga, 1, 1}, {"b", &gb, 1, 1}};
  auto state = init_adamw(p);
  try {
    adamw_step(p, g, state, 0.1, AdamWConfig{});
    FAIL() << "expected NumericalError";
  } catch (NumericalError const &e) {
    EXPECT_NE(std::string(e.what()).find("b"), std::string::npos);
  }
  EXPECT_EQ(a, 1.0);
  EXPECT_EQ(state.step, 0);
  EXPECT_EQ(state.m[0](0, 0), 0.0);
}

TEST(EarlyStop, PlateauAfterEpochFive)
{
  EarlyStopState s;
  std::vector<double> const acc{0.5, 0.6, 0.7, 0.8, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9};
  std::int64_t stopped = 0;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    auto const d = early_stop_update(s, acc[i], std::int64_t(i + 1), 5);
    if (d.should_stop) {
      stopped = std::int64_t(i + 1);
      break;
    }
  }
  EXPECT_EQ(stopped, 10);
  EXPECT_EQ(s.best_epoch, 5);
}

TEST(EarlyStop, PatienceOne)
{
  EarlyStopState s;
  EXPECT_TRUE(early_stop_update(s, 0.5, 1, 1).improved);
  auto const d = early_stop_update(s, 0.4, 2, 1);
  EXPECT_FALSE(d.improved);
  EXPECT_TRUE(d.should_stop);
}

TEST(EarlyStop, StrictImprovementOnly)
{
  EarlyStopState s;
  early_stop_update(s, 0.5, 1, 3);
  EXPECT_FALSE(early_stop_update(s, 0.5, 2, 3).improved);
  EXPECT_TRUE(early_stop_update(s, 0.51, 3, 3).improved);
  EXPECT_EQ(s.best_epoch, 3);
  EXPECT_EQ(s.epochs_since_improvement, 0);
  EXPECT_THROW(early_stop_update(s, 0.5, 4, 0), ConfigError);
}
