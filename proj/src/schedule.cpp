#include "gcvit/schedule.hpp"

#include "gcvit/types.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gcvit {

double cosine_lr(double t, double total, double lr_min, double lr_max)
{
  if (!(total >= 1.0)) { throw ConfigError("cosine_lr: total epochs must be at least 1"); }
  if (!(t >= 0.0 && t <= total)) { throw ConfigError(fmt::format("cosine_lr: t = {} outside [0, {}]", t, total)); }
  if (t == 0.0) { return lr_max; }
  if (t == total) { return lr_min; }
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(t * std::numbers::pi / total));
}

double step_lr(double t, std::vector<double> const &milestones, double gamma, double lr_max)
{
  if (!std::is_sorted(milestones.begin(), milestones.end())) {
    throw ConfigError("step_lr: milestones must be sorted ascending");
  }
  auto const passed = std::upper_bound(milestones.begin(), milestones.end(), t) - milestones.begin();
  return lr_max * std::pow(gamma, static_cast<double>(passed));
}

} // namespace gcvit
