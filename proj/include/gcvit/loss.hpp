#pragma once

#include "gcvit/types.hpp"

namespace gcvit {

// q_k = (1 - eps) [k == label] + eps / C
template <typename Scalar> Vector<Scalar> smoothed_targets(Index num_classes, Index label, double epsilon);

// -sum_k q_k log softmax(logits)_k. Throws NumericalError on non-finite logits, DimensionError on
// C < 2 or an out-of-range label, ConfigError for epsilon outside [0, 1).
template <typename Scalar> Scalar smoothed_cross_entropy(Vector<Scalar> const &logits, Index label, double epsilon);

// softmax(logits) - q
template <typename Scalar>
Vector<Scalar> smoothed_cross_entropy_backward(Vector<Scalar> const &logits, Index label, double epsilon);

} // namespace gcvit
