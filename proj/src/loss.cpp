#include "gcvit/loss.hpp"

#include "gcvit/layers.hpp"

#include <fmt/format.h>

namespace gcvit {

namespace {

template <typename Scalar> void check(Vector<Scalar> const &logits, Index label, double epsilon)
{
  if (logits.size() < 2) { throw DimensionError("smoothed_cross_entropy: need at least 2 classes"); }
  if (label < 0 || label >= logits.size()) {
    throw DimensionError(fmt::format("smoothed_cross_entropy: label {} out of range for {} classes", label, logits.size()));
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) { throw ConfigError("label smoothing must lie in [0, 1)"); }
  if (!logits.allFinite()) { throw NumericalError("smoothed_cross_entropy: non-finite logits"); }
}

} // namespace

template <typename Scalar> Vector<Scalar> smoothed_targets(Index num_classes, Index label, double epsilon)
{
  Vector<Scalar> q = Vector<Scalar>::Constant(num_classes, Scalar(epsilon / double(num_classes)));
  q(label) += Scalar(1.0 - epsilon);
  return q;
}

template <typename Scalar> Scalar smoothed_cross_entropy(Vector<Scalar> const &logits, Index label, double epsilon)
{
  check(logits, label, epsilon);
  Scalar const top = logits.maxCoeff();
  Scalar const lse = top + std::log((logits.array() - top).exp().sum());
  Vector<Scalar> const q = smoothed_targets<Scalar>(logits.size(), label, epsilon);
  return -(q.array() * (logits.array() - lse)).sum();
}

template <typename Scalar>
Vector<Scalar> smoothed_cross_entropy_backward(Vector<Scalar> const &logits, Index label, double epsilon)
{
  check(logits, label, epsilon);
  return softmax<Scalar>(logits) - smoothed_targets<Scalar>(logits.size(), label, epsilon);
}

template Vector<float> smoothed_targets(Index, Index, double);
template Vector<double> smoothed_targets(Index, Index, double);
template float smoothed_cross_entropy(Vector<float> const &, Index, double);
template double smoothed_cross_entropy(Vector<double> const &, Index, double);
template Vector<float> smoothed_cross_entropy_backward(Vector<float> const &, Index, double);
template Vector<double> smoothed_cross_entropy_backward(Vector<double> const &, Index, double);

} // namespace gcvit
