#pragma once

#include "gcvit/types.hpp"

#include <array>
#include <filesystem>

namespace gcvit {

enum class RangeTag
{
  Raw01,
  Normalized,
};

// H x W x 3 image. `values` holds one row per pixel (index y * width + x) and one column per
// channel, so channel planes are contiguous and the matrix feeds a convolution directly.
struct ImageTensor
{
  Index height = 0;
  Index width = 0;
  Matrix<double> values;
  RangeTag range = RangeTag::Raw01;

  static constexpr Index channels = 3;

  ImageTensor() = default;
  ImageTensor(Index h, Index w, RangeTag tag = RangeTag::Raw01);

  double &at(Index y, Index x, Index c) { return values(y * width + x, c); }
  double at(Index y, Index x, Index c) const { return values(y * width + x, c); }

  // Shape matches the declared dimensions, and raw images lie in [0, 1].
  bool valid() const;

  bool operator==(ImageTensor const &) const = default;
};

inline constexpr std::array<double, 3> kImageNetMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImageNetStd{0.229, 0.224, 0.225};

// (value - mean_c) / std_c per channel. Throws ConfigError on an already normalized image.
ImageTensor normalize(ImageTensor const &image,
                      std::array<double, 3> const &mean = kImageNetMean,
                      std::array<double, 3> const &std = kImageNetStd);
ImageTensor denormalize(ImageTensor const &image,
                        std::array<double, 3> const &mean = kImageNetMean,
                        std::array<double, 3> const &std = kImageNetStd);

// Bilinear resampling with half-pixel centers. Same-size resize is an exact copy.
ImageTensor resize_bilinear(ImageTensor const &image, Index height, Index width);

ImageTensor hflip(ImageTensor const &image);

// Binary (P6) or ASCII (P3) portable pixmap with maxval up to 65535.
ImageTensor read_ppm(std::filesystem::path const &path);
// 8-bit P6; values are clamped to [0, 1] and rounded to the nearest level.
void write_ppm(ImageTensor const &image, std::filesystem::path const &path);

} // namespace gcvit
