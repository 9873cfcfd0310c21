#pragma once

#include "gcvit/model.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace gcvit {

struct AdamWConfig
{
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

template <typename Scalar> struct AdamWState
{
  std::vector<Matrix<Scalar>> m, v; // one pair per parameter tensor, in parameters() order
  std::int64_t step = 0;
};

template <typename Scalar> AdamWState<Scalar> init_adamw(std::vector<ParamRef<Scalar>> const &params);

// One decoupled-weight-decay Adam step with bias correction:
//   theta <- theta - lr * wd * theta
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
// All gradients are checked first; a non-finite one throws NumericalError naming the tensor and
// leaves parameters and moments untouched.
template <typename Scalar>
void adamw_step(std::vector<ParamRef<Scalar>> const &params, std::vector<ParamRef<Scalar>> const &grads,
                AdamWState<Scalar> &state, double lr, AdamWConfig const &cfg);

// Validation-metric early stopping with strict improvement.
struct EarlyStopState
{
  double best_metric = -std::numeric_limits<double>::infinity();
  std::int64_t best_epoch = -1;
  std::int64_t epochs_since_improvement = 0;
};

struct EarlyStopDecision
{
  bool improved = false;
  bool should_stop = false;
};

EarlyStopDecision early_stop_update(EarlyStopState &state, double metric, std::int64_t epoch, std::int64_t patience);

} // namespace gcvit
