#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gcvit {

using Index = Eigen::Index;

template <typename Scalar> using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar> using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar> using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Shapes that do not line up (patch size vs image, odd grid at a downsample, ...).
struct DimensionError : Error
{
  using Error::Error;
};

// NaN/Inf in a forward pass, loss or gradient.
struct NumericalError : Error
{
  using Error::Error;
};

struct DatasetError : Error
{
  using Error::Error;
};

struct IoError : Error
{
  using Error::Error;
};

// Invalid user-facing configuration values.
struct ConfigError : Error
{
  using Error::Error;
};

} // namespace gcvit
