#include "gcvit/synth.hpp"

#include "gcvit/random.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace fs = std::filesystem;

namespace gcvit {

namespace {

std::array<double, 3> hsv_to_rgb(double hue_deg, double sat, double val)
{
  double const c = val * sat;
  double const h = hue_deg / 60.0;
  double const x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  double const m = val - c;
  std::array<double, 3> rgb{};
  switch (static_cast<int>(h) % 6) {
  case 0: rgb = {c, x, 0}; break;
  case 1: rgb = {x, c, 0}; break;
  case 2: rgb = {0, c, x}; break;
  case 3: rgb = {0, x, c}; break;
  case 4: rgb = {x, 0, c}; break;
  default: rgb = {c, 0, x}; break;
  }
  for (double &v : rgb) { v += m; }
  return rgb;
}

constexpr double kTexture = 0.08;
constexpr double kNoise = 0.03;

} // namespace

std::vector<std::array<double, 3>> synth_palette(Index num_classes)
{
  if (num_classes < 2 || num_classes > kMaxSynthClasses) {
    throw ConfigError(fmt::format("synthetic datasets support 2..{} classes", kMaxSynthClasses));
  }
  std::vector<std::array<double, 3>> palette;
  if (num_classes <= 12) {
    for (Index c = 0; c < num_classes; ++c) { palette.push_back(hsv_to_rgb(30.0 * double(c), 0.8, 0.9)); }
    return palette;
  }
  auto level = [](Index k) { return 0.1 + double(k) * 0.8 / 3.0; };
  for (Index c = 0; c < num_classes; ++c) { palette.push_back({level(c / 16), level((c / 4) % 4), level(c % 4)}); }
  return palette;
}

ImageTensor synth_image(Index class_id, Index num_classes, Index size, std::uint64_t seed)
{
  if (class_id < 0 || class_id >= num_classes) { throw ConfigError("synth_image: class id out of range"); }
  if (size < 1) { throw ConfigError("synth_image: size must be positive"); }
  auto const base = synth_palette(num_classes)[std::size_t(class_id)];
  Rng rng(seed);
  double const angle = double(class_id % 4) * std::numbers::pi / 4.0;
  double const cycles = 2.0 + double((class_id / 4) % 3);
  double const phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double const kx = 2.0 * std::numbers::pi * cycles * std::cos(angle) / double(size);
  double const ky = 2.0 * std::numbers::pi * cycles * std::sin(angle) / double(size);

  ImageTensor img(size, size);
  for (Index y = 0; y < size; ++y) {
    for (Index x = 0; x < size; ++x) {
      double const stripe = 1.0 + kTexture * std::sin(kx * double(x) + ky * double(y) + phase);
      for (Index c = 0; c < 3; ++c) {
        double const v = base[std::size_t(c)] * stripe + rng.uniform(-kNoise, kNoise);
        img.at(y, x, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return img;
}

DatasetManifest synth_dataset(fs::path const &root, Index num_classes, Index per_class, Index image_size, std::uint64_t seed)
{
  if (per_class < 1) { throw ConfigError("synth_dataset: per_class must be at least 1"); }
  synth_palette(num_classes);
  fs::create_directories(root);
  DatasetManifest m;
  for (Index c = 0; c < num_classes; ++c) {
    std::string const name = fmt::format("class_{:02d}", c);
    m.class_names.push_back(name);
    fs::path const dir = root / name;
    fs::create_directories(dir);
    for (Index i = 0; i < per_class; ++i) {
      fs::path const file = dir / fmt::format("img_{:04d}.ppm", i);
      write_ppm(synth_image(c, num_classes, image_size, derive_seed(seed, "synth", std::uint64_t(c), std::uint64_t(i))), file);
      m.entries.push_back({file, c, {}});
    }
  }
  return m;
}

} // namespace gcvit
