#pragma once

#include "gcvit/image.hpp"
#include "gcvit/random.hpp"

#include <array>
#include <filesystem>
#include <string>

namespace gcvit {

// Training-time augmentation and normalization settings. The defaults are the cat-breed recipe:
// 224x224 random-area crops at scale [0.8, 1.0], horizontal flips with probability 0.5,
// rotations up to 20 degrees, +-20% brightness/contrast/saturation jitter, ImageNet statistics.
struct AugmentPolicy
{
  std::int64_t crop_size = 224;
  std::array<double, 2> scale_range{0.8, 1.0};
  double max_rotation = 20.0; // degrees
  double hflip_prob = 0.5;
  std::array<double, 3> jitter_limits{0.2, 0.2, 0.2}; // brightness, contrast, saturation
  std::array<double, 3> normalization_mean = kImageNetMean;
  std::array<double, 3> normalization_std = kImageNetStd;

  void validate() const;

  bool operator==(AugmentPolicy const &) const = default;
};

// Policy with every random transform collapsed to the identity.
AugmentPolicy identity_policy(std::int64_t crop_size);

// Aspect-ratio bounds for random-area crops.
inline constexpr double kCropMinRatio = 3.0 / 4.0;
inline constexpr double kCropMaxRatio = 4.0 / 3.0;

// `key = value` lines, one per policy field; arrays are comma separated. '#' starts a comment.
// Keys not present keep their default; unknown keys are an error.
AugmentPolicy parse_policy(std::string const &text);
std::string format_policy(AugmentPolicy const &policy);
AugmentPolicy load_policy(std::filesystem::path const &path);
void save_policy(AugmentPolicy const &policy, std::filesystem::path const &path);

struct CropBox
{
  Index y = 0, x = 0, height = 0, width = 0;
};

// Random-area crop window: area fraction uniform in `scale_range`, log aspect ratio uniform in
// [3/4, 4/3], up to 10 attempts, then a centered crop clamped to the ratio bounds.
CropBox sample_crop(Index height, Index width, std::array<double, 2> const &scale_range, Rng &rng);

ImageTensor crop(ImageTensor const &image, CropBox const &box);

// Rotation about the image center by `degrees` (counter-clockwise) with bilinear sampling;
// pixels that map outside the source take the source's per-channel mean.
ImageTensor rotate(ImageTensor const &image, double degrees);

// Brightness, then contrast (around the mean luma), then saturation (around per-pixel luma);
// each factor is applied and clamped to [0, 1] in turn. A factor of exactly 1 is a no-op.
ImageTensor color_jitter(ImageTensor const &image, double brightness, double contrast, double saturation);

// Crop + resize, flip, rotation and color jitter, in that order, on a raw [0, 1] image. The
// output stays raw and within [0, 1]. Throws DimensionError when the image is too small to crop.
ImageTensor augment_train(ImageTensor const &image, AugmentPolicy const &policy, Rng &rng);

// Deterministic resize to crop_size followed by normalization.
ImageTensor preprocess_eval(ImageTensor const &image, AugmentPolicy const &policy);

// augment_train followed by normalization.
ImageTensor preprocess_train(ImageTensor const &image, AugmentPolicy const &policy, Rng &rng);

} // namespace gcvit
