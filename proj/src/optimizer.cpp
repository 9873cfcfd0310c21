#include "gcvit/optimizer.hpp"

namespace gcvit {

template <typename Scalar> AdamWState<Scalar> init_adamw(std::vector<ParamRef<Scalar>> const &params)
{
  AdamWState<Scalar> s;
  for (auto const &p : params) {
    s.m.push_back(Matrix<Scalar>::Zero(p.rows, p.cols));
    s.v.push_back(Matrix<Scalar>::Zero(p.rows, p.cols));
  }
  return s;
}

template <typename Scalar>
void adamw_step(std::vector<ParamRef<Scalar>> const &params, std::vector<ParamRef<Scalar>> const &grads,
                AdamWState<Scalar> &state, double lr, AdamWConfig const &cfg)
{
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DimensionError("adamw_step: parameter, gradient and moment lists differ in length");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows != params[i].rows || grads[i].cols != params[i].cols) {
      throw DimensionError(fmt::format("adamw_step: gradient shape mismatch for {}", params[i].name));
    }
    if (!grads[i].map().allFinite()) {
      throw NumericalError(fmt::format("adamw_step: non-finite gradient in {} at step {}", params[i].name, state.step + 1));
    }
  }
  ++state.step;
  double const c1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  double const c2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  auto const b1 = Scalar(cfg.beta1);
  auto const b2 = Scalar(cfg.beta2);
  auto const decay = Scalar(1.0 - lr * cfg.weight_decay);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].map();
    auto const g = grads[i].map();
    Matrix<Scalar> &m = state.m[i];
    Matrix<Scalar> &v = state.v[i];
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseAbs2();
    theta *= decay;
    theta.array() -= Scalar(lr) * (m.array() / Scalar(c1)) / ((v.array() / Scalar(c2)).sqrt() + Scalar(cfg.eps));
  }
}

EarlyStopDecision early_stop_update(EarlyStopState &state, double metric, std::int64_t epoch, std::int64_t patience)
{
  if (patience < 1) { throw ConfigError("early stopping patience must be at least 1"); }
  EarlyStopDecision d;
  if (metric > state.best_metric) {
    state.best_metric = metric;
    state.best_epoch = epoch;
    state.epochs_since_improvement = 0;
    d.improved = true;
  } else {
    ++state.epochs_since_improvement;
  }
  d.should_stop = state.epochs_since_improvement >= patience;
  return d;
}

template AdamWState<float> init_adamw(std::vector<ParamRef<float>> const &);
template AdamWState<double> init_adamw(std::vector<ParamRef<double>> const &);
template void adamw_step(std::vector<ParamRef<float>> const &, std::vector<ParamRef<float>> const &, AdamWState<float> &,
                         double, AdamWConfig const &);
template void adamw_step(std::vector<ParamRef<double>> const &, std::vector<ParamRef<double>> const &,
                         AdamWState<double> &, double, AdamWConfig const &);

} // namespace gcvit
