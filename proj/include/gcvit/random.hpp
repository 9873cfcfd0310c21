#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace gcvit {

// splitmix64 finalizer, used to derive independent labelled streams from one master seed.
std::uint64_t mix64(std::uint64_t x);

// Seed for the stream `label` (e.g. "split", "augment", "init", "shuffle"), optionally keyed by
// up to two indices such as (epoch, sample).
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t a = 0, std::uint64_t b = 0);

// mt19937_64 with distribution helpers whose output does not depend on the standard library
// implementation, so seeded runs are reproducible across toolchains.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  // Standard normal (Box-Muller, no cached second value).
  double normal();

  // Normal(0, std) resampled until it falls within +-2 std.
  double truncated_normal(double std);

  template <typename T> void shuffle(std::vector<T> &items)
  {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto const j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

} // namespace gcvit
