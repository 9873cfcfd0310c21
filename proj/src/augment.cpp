#include "gcvit/augment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace gcvit {

void AugmentPolicy::validate() const
{
  if (crop_size <= 0) { throw ConfigError("crop_size must be positive"); }
  if (!(scale_range[0] > 0.0 && scale_range[0] <= scale_range[1] && scale_range[1] <= 1.0)) {
    throw ConfigError("scale_range must satisfy 0 < low <= high <= 1");
  }
  if (!(max_rotation >= 0.0)) { throw ConfigError("max_rotation must be non-negative"); }
  if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0)) { throw ConfigError("hflip_prob must lie in [0, 1]"); }
  for (double const j : jitter_limits) {
    if (!(j >= 0.0 && j < 1.0)) { throw ConfigError("jitter limits must lie in [0, 1)"); }
  }
  for (double const s : normalization_std) {
    if (!(s > 0.0)) { throw ConfigError("normalization_std entries must be positive"); }
  }
}

AugmentPolicy identity_policy(std::int64_t crop_size)
{
  AugmentPolicy p;
  p.crop_size = crop_size;
  p.scale_range = {1.0, 1.0};
  p.max_rotation = 0.0;
  p.hflip_prob = 0.0;
  p.jitter_limits = {0.0, 0.0, 0.0};
  return p;
}

namespace {

std::string trim(std::string const &s)
{
  auto const b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) { return {}; }
  auto const e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_numbers(std::string const &key, std::string const &value)
{
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string const t = trim(item);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(t, &used));
      if (used != t.size()) { throw std::invalid_argument(t); }
    } catch (std::exception const &) {
      throw ConfigError(fmt::format("policy key '{}': '{}' is not a number", key, t));
    }
  }
  return out;
}

template <std::size_t N> std::array<double, N> to_array(std::string const &key, std::vector<double> const &v)
{
  if (v.size() != N) { throw ConfigError(fmt::format("policy key '{}' expects {} values, got {}", key, N, v.size())); }
  std::array<double, N> a{};
  std::copy(v.begin(), v.end(), a.begin());
  return a;
}

template <std::size_t N> std::string join(std::array<double, N> const &a)
{
  std::string s;
  for (std::size_t i = 0; i < N; ++i) { s += fmt::format("{}{}", i ? "," : "", a[i]); }
  return s;
}

} // namespace

AugmentPolicy parse_policy(std::string const &text)
{
  AugmentPolicy p;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto const hash = line.find('#'); hash != std::string::npos) { line.erase(hash); }
    line = trim(line);
    if (line.empty()) { continue; }
    auto const eq = line.find('=');
    if (eq == std::string::npos) { throw ConfigError(fmt::format("policy line {}: expected key = value", lineno)); }
    std::string const key = trim(line.substr(0, eq));
    std::vector<double> const v = parse_numbers(key, trim(line.substr(eq + 1)));
    if (key == "crop_size") {
      double const c = to_array<1>(key, v)[0];
      if (c != std::floor(c)) { throw ConfigError("crop_size must be an integer"); }
      p.crop_size = static_cast<std::int64_t>(c);
    } else if (key == "scale_range") {
      p.scale_range = to_array<2>(key, v);
    } else if (key == "max_rotation") {
      p.max_rotation = to_array<1>(key, v)[0];
    } else if (key == "hflip_prob") {
      p.hflip_prob = to_array<1>(key, v)[0];
    } else if (key == "jitter_limits") {
      p.jitter_limits = to_array<3>(key, v);
    } else if (key == "normalization_mean") {
      p.normalization_mean = to_array<3>(key, v);
    } else if (key == "normalization_std") {
      p.normalization_std = to_array<3>(key, v);
    } else {
      throw ConfigError(fmt::format("policy line {}: unknown key '{}'", lineno, key));
    }
  }
  p.validate();
  return p;
}

std::string format_policy(AugmentPolicy const &p)
{
  return fmt::format("crop_size = {}\n"
                     "scale_range = {}\n"
                     "max_rotation = {}\n"
                     "hflip_prob = {}\n"
                     "jitter_limits = {}\n"
                     "normalization_mean = {}\n"
                     "normalization_std = {}\n",
                     p.crop_size, join(p.scale_range), p.max_rotation, p.hflip_prob, join(p.jitter_limits),
                     join(p.normalization_mean), join(p.normalization_std));
}

AugmentPolicy load_policy(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) { throw IoError(fmt::format("{}: cannot open policy file", path.string())); }
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_policy(ss.str());
  } catch (ConfigError const &e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_policy(AugmentPolicy const &policy, std::filesystem::path const &path)
{
  std::ofstream out(path);
  if (!out) { throw IoError(fmt::format("{}: cannot open for writing", path.string())); }
  out << format_policy(policy);
}

CropBox sample_crop(Index height, Index width, std::array<double, 2> const &scale_range, Rng &rng)
{
  double const area = double(height) * double(width);
  double const log_lo = std::log(kCropMinRatio);
  double const log_hi = std::log(kCropMaxRatio);
  for (int attempt = 0; attempt < 10; ++attempt) {
    double const target = area * rng.uniform(scale_range[0], scale_range[1]);
    double const ratio = std::exp(rng.uniform(log_lo, log_hi));
    auto const w = static_cast<Index>(std::lround(std::sqrt(target * ratio)));
    auto const h = static_cast<Index>(std::lround(std::sqrt(target / ratio)));
    if (w > 0 && h > 0 && w <= width && h <= height) {
      Index const y = static_cast<Index>(rng.below(std::uint64_t(height - h + 1)));
      Index const x = static_cast<Index>(rng.below(std::uint64_t(width - w + 1)));
      return {y, x, h, w};
    }
  }
  double const in_ratio = double(width) / double(height);
  Index w = width;
  Index h = height;
  if (in_ratio < kCropMinRatio) {
    h = std::min<Index>(height, std::lround(double(w) / kCropMinRatio));
  } else if (in_ratio > kCropMaxRatio) {
    w = std::min<Index>(width, std::lround(double(h) * kCropMaxRatio));
  }
  return {(height - h) / 2, (width - w) / 2, h, w};
}

ImageTensor crop(ImageTensor const &image, CropBox const &box)
{
  if (box.y < 0 || box.x < 0 || box.height <= 0 || box.width <= 0 || box.y + box.height > image.height ||
      box.x + box.width > image.width) {
    throw DimensionError("crop: window outside the image");
  }
  ImageTensor out(box.height, box.width, image.range);
  for (Index y = 0; y < box.height; ++y) {
    for (Index x = 0; x < box.width; ++x) {
      out.values.row(y * box.width + x) = image.values.row((box.y + y) * image.width + box.x + x);
    }
  }
  return out;
}

ImageTensor rotate(ImageTensor const &image, double degrees)
{
  if (degrees == 0.0) { return image; }
  double const theta = degrees * std::numbers::pi / 180.0;
  double const cs = std::cos(theta);
  double const sn = std::sin(theta);
  double const cy = 0.5 * double(image.height - 1);
  double const cx = 0.5 * double(image.width - 1);
  Eigen::RowVector3d const fill = image.values.colwise().mean();
  ImageTensor out(image.height, image.width, image.range);
  for (Index y = 0; y < image.height; ++y) {
    for (Index x = 0; x < image.width; ++x) {
      // inverse map: rotate the output coordinate back by -theta (y axis points down)
      double const dx = double(x) - cx;
      double const dy = double(y) - cy;
      double const sx = cs * dx - sn * dy + cx;
      double const sy = sn * dx + cs * dy + cy;
      Index const o = y * image.width + x;
      if (sx < 0.0 || sy < 0.0 || sx > double(image.width - 1) || sy > double(image.height - 1)) {
        out.values.row(o) = fill;
        continue;
      }
      auto const x0 = static_cast<Index>(std::floor(sx));
      auto const y0 = static_cast<Index>(std::floor(sy));
      Index const x1 = std::min(x0 + 1, image.width - 1);
      Index const y1 = std::min(y0 + 1, image.height - 1);
      double const wx = sx - double(x0);
      double const wy = sy - double(y0);
      out.values.row(o) = (1.0 - wy) * ((1.0 - wx) * image.values.row(y0 * image.width + x0) + wx * image.values.row(y0 * image.width + x1)) +
                          wy * ((1.0 - wx) * image.values.row(y1 * image.width + x0) + wx * image.values.row(y1 * image.width + x1));
    }
  }
  return out;
}

namespace {

Vector<double> luma(Matrix<double> const &rgb)
{
  return 0.299 * rgb.col(0) + 0.587 * rgb.col(1) + 0.114 * rgb.col(2);
}

} // namespace

ImageTensor color_jitter(ImageTensor const &image, double brightness, double contrast, double saturation)
{
  ImageTensor out = image;
  auto &v = out.values;
  if (brightness != 1.0) { v = (v * brightness).cwiseMax(0.0).cwiseMin(1.0); }
  if (contrast != 1.0) {
    double const m = luma(v).mean();
    v = ((v.array() - m) * contrast + m).cwiseMax(0.0).cwiseMin(1.0).matrix();
  }
  if (saturation != 1.0) {
    Vector<double> const g = luma(v);
    v = (((v.colwise() - g) * saturation).colwise() + g).cwiseMax(0.0).cwiseMin(1.0);
  }
  return out;
}

ImageTensor augment_train(ImageTensor const &image, AugmentPolicy const &policy, Rng &rng)
{
  policy.validate();
  if (image.range != RangeTag::Raw01) { throw ConfigError("augment_train: expects a raw [0, 1] image"); }
  if (image.height < 1 || image.width < 1 || double(image.height) * double(image.width) * policy.scale_range[0] < 1.0) {
    throw DimensionError(fmt::format("augment_train: {}x{} image is smaller than the minimum crop area", image.height, image.width));
  }
  CropBox const box = sample_crop(image.height, image.width, policy.scale_range, rng);
  ImageTensor out = resize_bilinear(crop(image, box), policy.crop_size, policy.crop_size);
  if (rng.uniform() < policy.hflip_prob) { out = hflip(out); }
  out = rotate(out, rng.uniform(-policy.max_rotation, policy.max_rotation));
  auto const [lb, lc, ls] = policy.jitter_limits;
  double const b = rng.uniform(1.0 - lb, 1.0 + lb);
  double const c = rng.uniform(1.0 - lc, 1.0 + lc);
  double const s = rng.uniform(1.0 - ls, 1.0 + ls);
  out = color_jitter(out, b, c, s);
  out.values = out.values.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

ImageTensor preprocess_eval(ImageTensor const &image, AugmentPolicy const &policy)
{
  return normalize(resize_bilinear(image, policy.crop_size, policy.crop_size), policy.normalization_mean,
                   policy.normalization_std);
}

ImageTensor preprocess_train(ImageTensor const &image, AugmentPolicy const &policy, Rng &rng)
{
  return normalize(augment_train(image, policy, rng), policy.normalization_mean, policy.normalization_std);
}

} // namespace gcvit
