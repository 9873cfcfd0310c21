#pragma once

#include "gcvit/types.hpp"

#include <cmath>
#include <numbers>

// Building blocks shared by the model: numerically stable softmax, layer normalization, GELU and a
// 3x3 convolution on row-major feature maps. Feature maps are (height*width) x channels matrices
// with spatial index y*width + x.

namespace gcvit {

template <typename Scalar> Vector<Scalar> softmax(Vector<Scalar> const &logits)
{
  Vector<Scalar> p = (logits.array() - logits.maxCoeff()).exp().matrix();
  return p / p.sum();
}

template <typename Scalar> void softmax_rows_inplace(Matrix<Scalar> &scores)
{
  for (Index r = 0; r < scores.rows(); ++r) {
    auto row = scores.row(r);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
}

// Backward of a row-wise softmax given its output `probs` and the upstream gradient.
template <typename Scalar> Matrix<Scalar> softmax_rows_backward(Matrix<Scalar> const &probs, Matrix<Scalar> const &grad)
{
  Vector<Scalar> const dots = (probs.array() * grad.array()).rowwise().sum().matrix();
  return (probs.array() * (grad.colwise() - dots).array()).matrix();
}

template <typename Scalar> struct LayerNormParams
{
  Vector<Scalar> gamma;
  Vector<Scalar> beta;

  static LayerNormParams identity(Index dim)
  {
    return {Vector<Scalar>::Ones(dim), Vector<Scalar>::Zero(dim)};
  }
};

template <typename Scalar> struct LayerNormCache
{
  Matrix<Scalar> normalized;
  Vector<Scalar> inv_std;
};

inline constexpr double kLayerNormEps = 1e-5;

// Normalizes every row of `x` to zero mean / unit variance, then scales and shifts.
template <typename Scalar>
Matrix<Scalar> layer_norm(Matrix<Scalar> const &x, LayerNormParams<Scalar> const &p, LayerNormCache<Scalar> *cache = nullptr)
{
  Index const d = x.cols();
  Vector<Scalar> const mean = x.rowwise().mean();
  Matrix<Scalar> centered = x.colwise() - mean;
  Vector<Scalar> const var = centered.array().square().rowwise().sum() / Scalar(d);
  Vector<Scalar> const inv_std = (var.array() + Scalar(kLayerNormEps)).rsqrt().matrix();
  centered.array().colwise() *= inv_std.array();
  Matrix<Scalar> y = (centered.array().rowwise() * p.gamma.transpose().array()).matrix();
  y.rowwise() += p.beta.transpose();
  if (cache) {
    cache->normalized = std::move(centered);
    cache->inv_std = inv_std;
  }
  return y;
}

// Returns dL/dx; accumulates dL/dgamma, dL/dbeta into `grads`.
template <typename Scalar>
Matrix<Scalar> layer_norm_backward(LayerNormCache<Scalar> const &cache,
                                   LayerNormParams<Scalar> const &p,
                                   Matrix<Scalar> const &grad,
                                   LayerNormParams<Scalar> &grads)
{
  Index const d = grad.cols();
  grads.gamma += (grad.array() * cache.normalized.array()).colwise().sum().transpose().matrix();
  grads.beta += grad.colwise().sum().transpose();
  Matrix<Scalar> const dxhat = (grad.array().rowwise() * p.gamma.transpose().array()).matrix();
  Vector<Scalar> const sum_d = dxhat.rowwise().sum();
  Vector<Scalar> const sum_dx = (dxhat.array() * cache.normalized.array()).rowwise().sum().matrix();
  Matrix<Scalar> dx = (Scalar(d) * dxhat.array()).matrix();
  dx.colwise() -= sum_d;
  dx -= (cache.normalized.array().colwise() * sum_dx.array()).matrix();
  dx.array().colwise() *= cache.inv_std.array() / Scalar(d);
  return dx;
}

// Exact (erf-based) GELU.
template <typename Scalar> Matrix<Scalar> gelu(Matrix<Scalar> const &x)
{
  return x.unaryExpr([](Scalar v) { return Scalar(0.5) * v * (Scalar(1) + std::erf(v * Scalar(std::numbers::sqrt2 / 2))); });
}

template <typename Scalar> Matrix<Scalar> gelu_backward(Matrix<Scalar> const &x, Matrix<Scalar> const &grad)
{
  Scalar const inv_sqrt2 = Scalar(std::numbers::sqrt2 / 2);
  Scalar const inv_sqrt2pi = Scalar(std::numbers::inv_sqrtpi * std::numbers::sqrt2 / 2);
  Matrix<Scalar> const dydx = x.unaryExpr([&](Scalar v) {
    Scalar const cdf = Scalar(0.5) * (Scalar(1) + std::erf(v * inv_sqrt2));
    return cdf + v * inv_sqrt2pi * std::exp(Scalar(-0.5) * v * v);
  });
  return (grad.array() * dydx.array()).matrix();
}

// Geometry of a feature map stored as (height*width) x channels.
struct MapShape
{
  Index height = 0;
  Index width = 0;

  Index size() const { return height * width; }
  bool operator==(MapShape const &) const = default;
};

// 3x3 convolution with zero padding 1. Output side is (side - 1) / stride + 1.
template <typename Scalar> struct Conv3x3Params
{
  Matrix<Scalar> weight; // (9 * in_channels) x out_channels, row index (ky * 3 + kx) * in + c
  Vector<Scalar> bias;   // out_channels

  Index in_channels() const { return weight.rows() / 9; }
  Index out_channels() const { return weight.cols(); }
};

template <typename Scalar> struct Conv3x3Cache
{
  Matrix<Scalar> columns;
  MapShape input;
};

inline MapShape conv3x3_output_shape(MapShape in, Index stride)
{
  return {(in.height - 1) / stride + 1, (in.width - 1) / stride + 1};
}

template <typename Scalar> Matrix<Scalar> im2col3x3(Matrix<Scalar> const &x, MapShape in, Index stride)
{
  MapShape const out = conv3x3_output_shape(in, stride);
  Index const c = x.cols();
  Matrix<Scalar> cols = Matrix<Scalar>::Zero(out.size(), 9 * c);
  for (Index oy = 0; oy < out.height; ++oy) {
    for (Index ox = 0; ox < out.width; ++ox) {
      Index const row = oy * out.width + ox;
      for (Index ky = 0; ky < 3; ++ky) {
        Index const iy = oy * stride + ky - 1;
        if (iy < 0 || iy >= in.height) { continue; }
        for (Index kx = 0; kx < 3; ++kx) {
          Index const ix = ox * stride + kx - 1;
          if (ix < 0 || ix >= in.width) { continue; }
          cols.block(row, (ky * 3 + kx) * c, 1, c) = x.row(iy * in.width + ix);
        }
      }
    }
  }
  return cols;
}

template <typename Scalar> Matrix<Scalar> col2im3x3(Matrix<Scalar> const &cols, MapShape in, Index stride, Index channels)
{
  MapShape const out = conv3x3_output_shape(in, stride);
  Matrix<Scalar> x = Matrix<Scalar>::Zero(in.size(), channels);
  for (Index oy = 0; oy < out.height; ++oy) {
    for (Index ox = 0; ox < out.width; ++ox) {
      Index const row = oy * out.width + ox;
      for (Index ky = 0; ky < 3; ++ky) {
        Index const iy = oy * stride + ky - 1;
        if (iy < 0 || iy >= in.height) { continue; }
        for (Index kx = 0; kx < 3; ++kx) {
          Index const ix = ox * stride + kx - 1;
          if (ix < 0 || ix >= in.width) { continue; }
          x.row(iy * in.width + ix) += cols.block(row, (ky * 3 + kx) * channels, 1, channels);
        }
      }
    }
  }
  return x;
}

template <typename Scalar>
Matrix<Scalar> conv3x3(Matrix<Scalar> const &x, MapShape in, Index stride, Conv3x3Params<Scalar> const &p, Conv3x3Cache<Scalar> *cache = nullptr)
{
  if (x.rows() != in.size() || x.cols() != p.in_channels()) {
    throw DimensionError("conv3x3: input does not match the declared map shape or channel count");
  }
  Matrix<Scalar> cols = im2col3x3(x, in, stride);
  Matrix<Scalar> y = cols * p.weight;
  y.rowwise() += p.bias.transpose();
  if (cache) {
    cache->columns = std::move(cols);
    cache->input = in;
  }
  return y;
}

template <typename Scalar>
Matrix<Scalar> conv3x3_backward(Conv3x3Cache<Scalar> const &cache, Index stride, Conv3x3Params<Scalar> const &p,
                                Matrix<Scalar> const &grad, Conv3x3Params<Scalar> &grads)
{
  grads.weight.noalias() += cache.columns.transpose() * grad;
  grads.bias += grad.colwise().sum().transpose();
  Matrix<Scalar> const dcols = grad * p.weight.transpose();
  return col2im3x3(dcols, cache.input, stride, p.in_channels());
}

} // namespace gcvit
