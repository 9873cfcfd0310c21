#include "gcvit/random.hpp"

#include <cmath>
#include <numbers>

namespace gcvit {

std::uint64_t mix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t a, std::uint64_t b)
{
  // FNV-1a over the label
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char const c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t s = mix64(master ^ h);
  s = mix64(s ^ a);
  s = mix64(s ^ (b * 0x9e3779b97f4a7c15ULL));
  return s;
}

std::uint64_t Rng::below(std::uint64_t n)
{
  if (n <= 1) { return 0; }
  // rejection sampling to avoid modulo bias
  std::uint64_t const limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal()
{
  double u1 = uniform();
  while (u1 <= 0.0) { u1 = uniform(); }
  double const u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::truncated_normal(double std)
{
  double z;
  do {
    z = normal();
  } while (std::abs(z) > 2.0);
  return z * std;
}

} // namespace gcvit
