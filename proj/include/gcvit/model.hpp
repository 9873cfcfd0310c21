#pragma once

#include "gcvit/attention.hpp"
#include "gcvit/config.hpp"
#include "gcvit/image.hpp"
#include "gcvit/layers.hpp"

#include <fmt/format.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gcvit {

// Token matrix with the CLS token in row 0 and one row per patch (row-major over `grid`) after it.
template <typename Scalar> struct TokenSequence
{
  Matrix<Scalar> tokens;
  MapShape grid;

  Index num_patches() const { return tokens.rows() - 1; }
  Index dim() const { return tokens.cols(); }
};

// Two 3x3 stride-1 convolutions, each followed by GELU.
template <typename Scalar> struct Stem
{
  Conv3x3Params<Scalar> conv1, conv2;
};

template <typename Scalar> struct PatchEmbedParams
{
  Stem<Scalar> stem;
  Matrix<Scalar> projection; // D x (P * P * stem_channels)
  Vector<Scalar> cls;        // D
  Matrix<Scalar> positional; // N x D
};

template <typename Scalar> struct MlpParams
{
  Matrix<Scalar> w1; // D x hidden
  Vector<Scalar> b1;
  Matrix<Scalar> w2; // hidden x D
  Vector<Scalar> b2;
};

// Pre-norm transformer block: x + attn(norm1(x)), then + mlp(norm2(.)).
template <typename Scalar> struct Block
{
  LayerNormParams<Scalar> norm1;
  AttentionParams<Scalar> attn;
  LayerNormParams<Scalar> norm2;
  MlpParams<Scalar> mlp;
};

// Stride-2 convolution over the patch grid. The CLS token has no position; it is carried past
// the convolution and projected only when the width changes (cls_proj is empty otherwise).
template <typename Scalar> struct Downsample
{
  Conv3x3Params<Scalar> conv;
  Matrix<Scalar> cls_proj; // D_out x D_in, or 0 x 0
};

template <typename Scalar> struct Stage
{
  std::vector<Block<Scalar>> blocks;
  Index heads = 1;
  std::optional<Downsample<Scalar>> downsample;
};

template <typename Scalar> struct ClassifierHead
{
  Matrix<Scalar> weight; // C x D
  Vector<Scalar> bias;   // C
};

template <typename Scalar> struct GcVit
{
  ModelConfig config;
  PatchEmbedParams<Scalar> embed;
  std::vector<Stage<Scalar>> stages;
  LayerNormParams<Scalar> final_norm;
  ClassifierHead<Scalar> head;
};

// Random initialization: truncated normal (std 0.02) for projections, attention and head
// weights; fan-in scaled truncated normal for convolutions; N(0, 0.02^2) for the CLS token and
// positional encodings; zero biases; unit/zero layer norms.
template <typename Scalar> GcVit<Scalar> init_model(ModelConfig const &cfg, std::uint64_t seed);

// Every tensor laid out for `cfg` and set to zero (layer norms are identity).
template <typename Scalar> GcVit<Scalar> zero_model(ModelConfig const &cfg);

// Same structure as `model`, every tensor zero. Used as the gradient accumulator.
template <typename Scalar> GcVit<Scalar> zeros_like(GcVit<Scalar> const &model);

template <typename To, typename From> GcVit<To> cast_model(GcVit<From> const &model);

// ---- caches for the backward pass ---------------------------------------------------------

template <typename Scalar> struct PatchEmbedCache
{
  Conv3x3Cache<Scalar> conv1, conv2;
  Matrix<Scalar> pre1, pre2; // convolution outputs before GELU
  Matrix<Scalar> patches;    // N x (P * P * S)
  MapShape image;
};

template <typename Scalar> struct BlockCache
{
  LayerNormCache<Scalar> norm1, norm2;
  AttentionCache<Scalar> attn;
  Matrix<Scalar> normed2;
  Matrix<Scalar> hidden_pre;
  Matrix<Scalar> hidden;
};

template <typename Scalar> struct StageCache
{
  std::vector<BlockCache<Scalar>> blocks;
  Conv3x3Cache<Scalar> downsample;
  Vector<Scalar> cls_in;
};

template <typename Scalar> struct ForwardCache
{
  PatchEmbedCache<Scalar> embed;
  std::vector<StageCache<Scalar>> stages;
  LayerNormCache<Scalar> final_norm;
  Vector<Scalar> cls_normed;
};

// ---- forward ------------------------------------------------------------------------------

// Convolutional stem, patchify, z_i = E x_i + p_i, CLS prepended at row 0. Throws DimensionError
// when the image does not match the configured input size or is not divisible by the patch size.
template <typename Scalar>
TokenSequence<Scalar> patch_embed(ImageTensor const &image, ModelConfig const &cfg, PatchEmbedParams<Scalar> const &p,
                                  PatchEmbedCache<Scalar> *cache = nullptr);

template <typename Scalar>
Matrix<Scalar> block_forward(Matrix<Scalar> const &tokens, Block<Scalar> const &block, Index heads, BlockCache<Scalar> *cache = nullptr);

// Runs the stage's blocks, then its downsampling when present. Throws DimensionError for an odd
// grid side at a downsampling boundary.
template <typename Scalar>
TokenSequence<Scalar> stage_forward(TokenSequence<Scalar> const &features, Stage<Scalar> const &stage, StageCache<Scalar> *cache = nullptr);

template <typename Scalar> Vector<Scalar> head_logits(Vector<Scalar> const &cls, ClassifierHead<Scalar> const &head);

// softmax(W_c z + b_c).
template <typename Scalar> Vector<Scalar> classify(Vector<Scalar> const &cls, ClassifierHead<Scalar> const &head);

template <typename Scalar>
Vector<Scalar> forward_logits(GcVit<Scalar> const &model, ImageTensor const &image, ForwardCache<Scalar> *cache = nullptr);

// Class probabilities for a preprocessed (normalized, input-sized) image.
template <typename Scalar> Vector<Scalar> forward(GcVit<Scalar> const &model, ImageTensor const &image);

// ---- backward -----------------------------------------------------------------------------

template <typename Scalar>
Matrix<Scalar> block_backward(BlockCache<Scalar> const &cache, Block<Scalar> const &block, Index heads,
                              Matrix<Scalar> const &grad, Block<Scalar> &grads);

// Accumulates dL/dparams for one sample into `grads` given dL/dlogits.
template <typename Scalar>
void backward(GcVit<Scalar> const &model, ForwardCache<Scalar> const &cache, Vector<Scalar> const &grad_logits, GcVit<Scalar> &grads);

// ---- parameter enumeration ----------------------------------------------------------------

// Calls fn(name, tensor) for every parameter tensor in a fixed order. Works for const and
// mutable models; `tensor` is a Matrix or Vector reference.
template <typename Model, typename Fn> void visit_parameters(Model &model, Fn &&fn)
{
  auto conv = [&](std::string const &prefix, auto &c) {
    fn(prefix + ".weight", c.weight);
    fn(prefix + ".bias", c.bias);
  };
  auto norm = [&](std::string const &prefix, auto &n) {
    fn(prefix + ".gamma", n.gamma);
    fn(prefix + ".beta", n.beta);
  };
  conv("embed.stem.conv1", model.embed.stem.conv1);
  conv("embed.stem.conv2", model.embed.stem.conv2);
  fn(std::string("embed.projection"), model.embed.projection);
  fn(std::string("embed.cls"), model.embed.cls);
  fn(std::string("embed.positional"), model.embed.positional);
  for (std::size_t s = 0; s < model.stages.size(); ++s) {
    auto &stage = model.stages[s];
    for (std::size_t b = 0; b < stage.blocks.size(); ++b) {
      auto &block = stage.blocks[b];
      std::string const pre = fmt::format("stages.{}.blocks.{}", s, b);
      norm(pre + ".norm1", block.norm1);
      fn(pre + ".attn.w_q", block.attn.wq);
      fn(pre + ".attn.w_k", block.attn.wk);
      fn(pre + ".attn.w_v", block.attn.wv);
      fn(pre + ".attn.w_g", block.attn.wg);
      fn(pre + ".attn.w_gk", block.attn.wgk);
      fn(pre + ".attn.w_gv", block.attn.wgv);
      norm(pre + ".norm2", block.norm2);
      fn(pre + ".mlp.w1", block.mlp.w1);
      fn(pre + ".mlp.b1", block.mlp.b1);
      fn(pre + ".mlp.w2", block.mlp.w2);
      fn(pre + ".mlp.b2", block.mlp.b2);
    }
    if (stage.downsample) {
      std::string const pre = fmt::format("stages.{}.downsample", s);
      conv(pre + ".conv", stage.downsample->conv);
      if (stage.downsample->cls_proj.size() > 0) { fn(pre + ".cls_proj", stage.downsample->cls_proj); }
    }
  }
  norm("final_norm", model.final_norm);
  fn(std::string("head.weight"), model.head.weight);
  fn(std::string("head.bias"), model.head.bias);
}

// Flat view of one parameter tensor (vectors appear as n x 1).
template <typename Scalar> struct ParamRef
{
  std::string name;
  Scalar *data = nullptr;
  Index rows = 0;
  Index cols = 0;

  Eigen::Map<Matrix<Scalar>> map() const { return {data, rows, cols}; }
  Index size() const { return rows * cols; }
};

template <typename Scalar> std::vector<ParamRef<Scalar>> parameters(GcVit<Scalar> &model)
{
  std::vector<ParamRef<Scalar>> refs;
  visit_parameters(model, [&](std::string const &name, auto &t) { refs.push_back({name, t.data(), t.rows(), t.cols()}); });
  return refs;
}

template <typename Scalar> Index parameter_count(GcVit<Scalar> const &model)
{
  Index n = 0;
  visit_parameters(model, [&](std::string const &, auto const &t) { n += t.size(); });
  return n;
}

} // namespace gcvit
