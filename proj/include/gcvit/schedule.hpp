#pragma once

#include <vector>

namespace gcvit {

// lr_min + (lr_max - lr_min) (1 + cos(t pi / T)) / 2 for 0 <= t <= T, with exact endpoints.
double cosine_lr(double t, double total, double lr_min, double lr_max);

// lr_max * gamma^(number of milestones <= t). Milestones must be sorted ascending.
double step_lr(double t, std::vector<double> const &milestones, double gamma, double lr_max);

} // namespace gcvit
