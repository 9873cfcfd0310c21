#pragma once

#include "gcvit/dataset.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace gcvit {

// Base colors for synthetic classes. Up to 12 classes sit on an HSV hue wheel (hue 30 * c degrees,
// S 0.8, V 0.9); larger sets use the 4x4x4 RGB grid with levels 0.1 + k * 0.8 / 3. Any two
// entries differ by at least 0.2 in some channel.
std::vector<std::array<double, 3>> synth_palette(Index num_classes);

inline constexpr Index kMaxSynthClasses = 64;

// One image of class `class_id`: the class base color modulated by a stripe texture whose
// orientation and frequency depend on the class, with a seeded phase and per-pixel noise.
ImageTensor synth_image(Index class_id, Index num_classes, Index size, std::uint64_t seed);

// Writes `root/class_XX/img_YYYY.ppm` for every class and sample and returns the manifest (the
// same one load_dataset(root) would produce). Files are bit-identical for a given seed.
DatasetManifest synth_dataset(std::filesystem::path const &root, Index num_classes, Index per_class, Index image_size,
                              std::uint64_t seed);

} // namespace gcvit
