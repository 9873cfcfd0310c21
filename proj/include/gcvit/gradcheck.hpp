#pragma once

#include "gcvit/config.hpp"
#include "gcvit/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gcvit {

struct GradCheckOptions
{
  std::uint64_t seed = 0;
  double step = 1e-5;
  double attention_tolerance = 1e-4;
  double loss_tolerance = 1e-4;
  double end_to_end_tolerance = 1e-3;
  // entries sampled per parameter tensor in the end-to-end check
  Index samples_per_tensor = 3;
  ModelConfig model = desk_tiny();
  // Test hook: scales every analytic gradient by 1.5 before comparison.
  bool corrupt_gradient = false;
};

struct GradCheckResult
{
  std::string name;
  double max_relative_error = 0.0;
  std::string worst_entry; // tensor[index] with the largest error
  double tolerance = 0.0;
  Index checked = 0;

  bool passed() const { return max_relative_error < tolerance; }
};

// |a - n| / max(|a|, |n|, 1e-5); the floor absorbs finite-difference noise on exactly-zero gradients
double relative_error(double analytic, double numeric);

// gc_attention with random small inputs (7 tokens, D = 8, 2 heads) against the scalar loss
// sum(out .* R); every entry of X and of every parameter tensor is checked.
GradCheckResult check_attention(GradCheckOptions const &opts);

// smoothed cross-entropy over 5 classes, every logit.
GradCheckResult check_smoothed_cross_entropy(GradCheckOptions const &opts);

// image -> smoothed CE through the whole model (opts.model), sampled entries of every tensor.
GradCheckResult check_end_to_end(GradCheckOptions const &opts);

std::vector<GradCheckResult> run_gradcheck(GradCheckOptions const &opts);

} // namespace gcvit
