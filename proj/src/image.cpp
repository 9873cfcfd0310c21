#include "gcvit/image.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace gcvit {

ImageTensor::ImageTensor(Index h, Index w, RangeTag tag)
  : height(h)
  , width(w)
  , values(Matrix<double>::Zero(h * w, channels))
  , range(tag)
{
}

bool ImageTensor::valid() const
{
  if (height < 0 || width < 0 || values.rows() != height * width || values.cols() != channels) { return false; }
  if (!values.allFinite()) { return false; }
  if (range == RangeTag::Raw01 && values.size() > 0) { return values.minCoeff() >= 0.0 && values.maxCoeff() <= 1.0; }
  return true;
}

ImageTensor normalize(ImageTensor const &image, std::array<double, 3> const &mean, std::array<double, 3> const &std)
{
  if (image.range == RangeTag::Normalized) { throw ConfigError("normalize: image is already normalized"); }
  ImageTensor out = image;
  for (Index c = 0; c < ImageTensor::channels; ++c) {
    out.values.col(c) = (image.values.col(c).array() - mean[c]) / std[c];
  }
  out.range = RangeTag::Normalized;
  return out;
}

ImageTensor denormalize(ImageTensor const &image, std::array<double, 3> const &mean, std::array<double, 3> const &std)
{
  if (image.range != RangeTag::Normalized) { throw ConfigError("denormalize: image is not normalized"); }
  ImageTensor out = image;
  for (Index c = 0; c < ImageTensor::channels; ++c) {
    out.values.col(c) = image.values.col(c).array() * std[c] + mean[c];
  }
  out.range = RangeTag::Raw01;
  return out;
}

ImageTensor resize_bilinear(ImageTensor const &image, Index height, Index width)
{
  if (height <= 0 || width <= 0 || image.height <= 0 || image.width <= 0) {
    throw DimensionError("resize_bilinear: empty source or target");
  }
  ImageTensor out(height, width, image.range);
  double const sy = double(image.height) / double(height);
  double const sx = double(image.width) / double(width);
  for (Index y = 0; y < height; ++y) {
    double const fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(image.height - 1));
    auto const y0 = static_cast<Index>(std::floor(fy));
    Index const y1 = std::min(y0 + 1, image.height - 1);
    double const wy = fy - double(y0);
    for (Index x = 0; x < width; ++x) {
      double const fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(image.width - 1));
      auto const x0 = static_cast<Index>(std::floor(fx));
      Index const x1 = std::min(x0 + 1, image.width - 1);
      double const wx = fx - double(x0);
      for (Index c = 0; c < ImageTensor::channels; ++c) {
        double const top = image.at(y0, x0, c) * (1.0 - wx) + image.at(y0, x1, c) * wx;
        double const bottom = image.at(y1, x0, c) * (1.0 - wx) + image.at(y1, x1, c) * wx;
        out.at(y, x, c) = wy == 0.0 ? top : top * (1.0 - wy) + bottom * wy;
      }
    }
  }
  return out;
}

ImageTensor hflip(ImageTensor const &image)
{
  ImageTensor out = image;
  for (Index y = 0; y < image.height; ++y) {
    for (Index x = 0; x < image.width; ++x) {
      out.values.row(y * image.width + x) = image.values.row(y * image.width + (image.width - 1 - x));
    }
  }
  return out;
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream &in)
{
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {}
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) { break; }
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

long parse_header_int(std::istream &in, std::filesystem::path const &path, char const *what)
{
  std::string const tok = next_token(in);
  try {
    std::size_t used = 0;
    long const v = std::stol(tok, &used);
    if (used == tok.size() && v > 0) { return v; }
  } catch (std::exception const &) {
  }
  throw IoError(fmt::format("{}: bad PPM {} '{}'", path.string(), what, tok));
}

} // namespace

ImageTensor read_ppm(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError(fmt::format("{}: cannot open", path.string())); }
  std::string const magic = next_token(in);
  if (magic != "P6" && magic != "P3") { throw IoError(fmt::format("{}: not a P6/P3 pixmap", path.string())); }
  long const width = parse_header_int(in, path, "width");
  long const height = parse_header_int(in, path, "height");
  long const maxval = parse_header_int(in, path, "maxval");
  if (maxval > 65535) { throw IoError(fmt::format("{}: maxval {} out of range", path.string(), maxval)); }

  ImageTensor image(height, width);
  std::size_t const count = std::size_t(width) * std::size_t(height) * 3;
  std::vector<unsigned> samples(count);
  if (magic == "P6") {
    std::size_t const bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(count * bytes);
    in.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw IoError(fmt::format("{}: truncated pixel data", path.string()));
    }
    for (std::size_t i = 0; i < count; ++i) {
      samples[i] = bytes == 1 ? raw[i] : (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1];
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      if (!(in >> samples[i])) { throw IoError(fmt::format("{}: truncated pixel data", path.string())); }
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (samples[i] > unsigned(maxval)) { throw IoError(fmt::format("{}: sample exceeds maxval", path.string())); }
    auto const pixel = static_cast<Index>(i / 3);
    image.values(pixel, static_cast<Index>(i % 3)) = double(samples[i]) / double(maxval);
  }
  return image;
}

void write_ppm(ImageTensor const &image, std::filesystem::path const &path)
{
  if (image.range != RangeTag::Raw01) { throw IoError(fmt::format("{}: only raw images can be written", path.string())); }
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw IoError(fmt::format("{}: cannot open for writing", path.string())); }
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<unsigned char> raw(std::size_t(image.values.size()));
  for (Index p = 0; p < image.height * image.width; ++p) {
    for (Index c = 0; c < 3; ++c) {
      double const v = std::clamp(image.values(p, c), 0.0, 1.0);
      raw[std::size_t(p * 3 + c)] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
  }
  out.write(reinterpret_cast<char const *>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) { throw IoError(fmt::format("{}: write failed", path.string())); }
}

} // namespace gcvit
