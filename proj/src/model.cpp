#include "gcvit/model.hpp"

#include "gcvit/random.hpp"

namespace gcvit {

namespace {

template <typename Scalar> Conv3x3Params<Scalar> zero_conv(Index in, Index out)
{
  return {Matrix<Scalar>::Zero(9 * in, out), Vector<Scalar>::Zero(out)};
}

} // namespace

template <typename Scalar> GcVit<Scalar> zero_model(ModelConfig const &cfg)
{
  cfg.validate();
  GcVit<Scalar> m;
  m.config = cfg;
  Index const d = cfg.embed_dim();
  Index const s = cfg.stem_channels;
  m.embed.stem.conv1 = zero_conv<Scalar>(ImageTensor::channels, s);
  m.embed.stem.conv2 = zero_conv<Scalar>(s, s);
  m.embed.projection = Matrix<Scalar>::Zero(d, cfg.patch_size * cfg.patch_size * s);
  m.embed.cls = Vector<Scalar>::Zero(d);
  m.embed.positional = Matrix<Scalar>::Zero(cfg.num_patches(), d);
  for (std::size_t st = 0; st < cfg.num_stages(); ++st) {
    Index const w = cfg.stage_dims[st];
    Index const hidden = w * cfg.mlp_ratio;
    Stage<Scalar> stage;
    stage.heads = cfg.num_heads[st];
    for (std::int64_t b = 0; b < cfg.stage_depths[st]; ++b) {
      Block<Scalar> block;
      block.norm1 = LayerNormParams<Scalar>::identity(w);
      block.attn = AttentionParams<Scalar>::zeros(w);
      block.norm2 = LayerNormParams<Scalar>::identity(w);
      block.mlp = {Matrix<Scalar>::Zero(w, hidden), Vector<Scalar>::Zero(hidden), Matrix<Scalar>::Zero(hidden, w),
                   Vector<Scalar>::Zero(w)};
      stage.blocks.push_back(std::move(block));
    }
    if (st + 1 < cfg.num_stages()) {
      Index const next = cfg.stage_dims[st + 1];
      Downsample<Scalar> down;
      down.conv = zero_conv<Scalar>(w, next);
      if (next != w) { down.cls_proj = Matrix<Scalar>::Zero(next, w); }
      stage.downsample = std::move(down);
    }
    m.stages.push_back(std::move(stage));
  }
  Index const last = cfg.stage_dims.back();
  m.final_norm = LayerNormParams<Scalar>::identity(last);
  m.head = {Matrix<Scalar>::Zero(cfg.num_classes, last), Vector<Scalar>::Zero(cfg.num_classes)};
  return m;
}

namespace {

template <typename Derived, typename Draw> void fill(Eigen::DenseBase<Derived> &t, Draw &&draw)
{
  using S = typename Derived::Scalar;
  for (Index j = 0; j < t.cols(); ++j) {
    for (Index i = 0; i < t.rows(); ++i) { t(i, j) = static_cast<S>(draw()); }
  }
}

constexpr double kInitStd = 0.02;

} // namespace

template <typename Scalar> GcVit<Scalar> init_model(ModelConfig const &cfg, std::uint64_t seed)
{
  GcVit<Scalar> m = zero_model<Scalar>(cfg);
  Rng rng(seed);
  auto trunc = [&] { return rng.truncated_normal(kInitStd); };
  auto conv_init = [&](Conv3x3Params<Scalar> &c) {
    double const std = std::sqrt(2.0 / double(c.weight.rows()));
    fill(c.weight, [&] { return rng.truncated_normal(std); });
  };
  conv_init(m.embed.stem.conv1);
  conv_init(m.embed.stem.conv2);
  fill(m.embed.projection, trunc);
  fill(m.embed.cls, [&] { return rng.normal() * kInitStd; });
  fill(m.embed.positional, [&] { return rng.normal() * kInitStd; });
  for (auto &stage : m.stages) {
    for (auto &block : stage.blocks) {
      for (auto *w : {&block.attn.wq, &block.attn.wk, &block.attn.wv, &block.attn.wgk, &block.attn.wgv}) { fill(*w, trunc); }
      fill(block.attn.wg, trunc);
      fill(block.mlp.w1, trunc);
      fill(block.mlp.w2, trunc);
    }
    if (stage.downsample) {
      conv_init(stage.downsample->conv);
      fill(stage.downsample->cls_proj, trunc);
    }
  }
  fill(m.head.weight, trunc);
  return m;
}

template <typename Scalar> GcVit<Scalar> zeros_like(GcVit<Scalar> const &model)
{
  GcVit<Scalar> out = zero_model<Scalar>(model.config);
  for (auto &ref : parameters(out)) { ref.map().setZero(); }
  return out;
}

template <typename To, typename From> GcVit<To> cast_model(GcVit<From> const &model)
{
  GcVit<To> out = zero_model<To>(model.config);
  std::vector<From const *> src;
  visit_parameters(model, [&](std::string const &, auto const &t) { src.push_back(t.data()); });
  std::size_t i = 0;
  for (auto &ref : parameters(out)) {
    Eigen::Map<Matrix<From> const> const in(src[i++], ref.rows, ref.cols);
    ref.map() = in.template cast<To>();
  }
  return out;
}

// ---- forward ------------------------------------------------------------------------------

template <typename Scalar>
TokenSequence<Scalar> patch_embed(ImageTensor const &image, ModelConfig const &cfg, PatchEmbedParams<Scalar> const &p,
                                  PatchEmbedCache<Scalar> *cache)
{
  Index const ps = cfg.patch_size;
  if (ps <= 0 || image.height % ps != 0 || image.width % ps != 0) {
    throw DimensionError(fmt::format("patch_embed: image {}x{} is not divisible by patch size {}", image.height, image.width, ps));
  }
  if (image.height != cfg.input_height || image.width != cfg.input_width) {
    throw DimensionError(fmt::format("patch_embed: image {}x{} does not match configured input {}x{}", image.height,
                                     image.width, cfg.input_height, cfg.input_width));
  }
  MapShape const shape{image.height, image.width};
  Matrix<Scalar> const x = image.values.cast<Scalar>();

  PatchEmbedCache<Scalar> local;
  PatchEmbedCache<Scalar> &c = cache ? *cache : local;
  c.image = shape;
  c.pre1 = conv3x3(x, shape, 1, p.stem.conv1, &c.conv1);
  Matrix<Scalar> const a1 = gelu(c.pre1);
  c.pre2 = conv3x3(a1, shape, 1, p.stem.conv2, &c.conv2);
  Matrix<Scalar> const a2 = gelu(c.pre2);

  Index const s = a2.cols();
  Index const gh = image.height / ps;
  Index const gw = image.width / ps;
  c.patches.resize(gh * gw, ps * ps * s);
  for (Index gy = 0; gy < gh; ++gy) {
    for (Index gx = 0; gx < gw; ++gx) {
      for (Index py = 0; py < ps; ++py) {
        for (Index px = 0; px < ps; ++px) {
          Index const pixel = (gy * ps + py) * image.width + gx * ps + px;
          c.patches.block(gy * gw + gx, (py * ps + px) * s, 1, s) = a2.row(pixel);
        }
      }
    }
  }

  TokenSequence<Scalar> seq;
  seq.grid = {gh, gw};
  seq.tokens.resize(gh * gw + 1, p.projection.rows());
  seq.tokens.row(0) = p.cls.transpose();
  seq.tokens.bottomRows(gh * gw).noalias() = c.patches * p.projection.transpose();
  seq.tokens.bottomRows(gh * gw) += p.positional;
  return seq;
}

template <typename Scalar>
Matrix<Scalar> block_forward(Matrix<Scalar> const &tokens, Block<Scalar> const &block, Index heads, BlockCache<Scalar> *cache)
{
  BlockCache<Scalar> local;
  BlockCache<Scalar> &c = cache ? *cache : local;
  Matrix<Scalar> const h1 = layer_norm(tokens, block.norm1, &c.norm1);
  Matrix<Scalar> x = tokens + gc_attention(h1, block.attn, heads, cache ? &c.attn : nullptr);
  c.normed2 = layer_norm(x, block.norm2, &c.norm2);
  c.hidden_pre = c.normed2 * block.mlp.w1;
  c.hidden_pre.rowwise() += block.mlp.b1.transpose();
  c.hidden = gelu(c.hidden_pre);
  x.noalias() += c.hidden * block.mlp.w2;
  x.rowwise() += block.mlp.b2.transpose();
  return x;
}

template <typename Scalar>
TokenSequence<Scalar> stage_forward(TokenSequence<Scalar> const &features, Stage<Scalar> const &stage, StageCache<Scalar> *cache)
{
  if (features.num_patches() != features.grid.size()) {
    throw DimensionError("stage_forward: token count does not match the patch grid");
  }
  TokenSequence<Scalar> out = features;
  if (cache) { cache->blocks.resize(stage.blocks.size()); }
  for (std::size_t b = 0; b < stage.blocks.size(); ++b) {
    if (stage.blocks[b].norm1.gamma.size() != out.dim()) { throw DimensionError("stage_forward: token width mismatch"); }
    out.tokens = block_forward(out.tokens, stage.blocks[b], stage.heads, cache ? &cache->blocks[b] : nullptr);
  }
  if (!stage.downsample) { return out; }

  Downsample<Scalar> const &down = *stage.downsample;
  if (out.grid.height % 2 != 0 || out.grid.width % 2 != 0) {
    throw DimensionError(fmt::format("stage_forward: cannot halve an odd {}x{} grid", out.grid.height, out.grid.width));
  }
  Index const n = out.num_patches();
  Matrix<Scalar> const patches = out.tokens.bottomRows(n);
  Matrix<Scalar> const reduced = conv3x3(patches, out.grid, 2, down.conv, cache ? &cache->downsample : nullptr);
  Vector<Scalar> const cls = out.tokens.row(0).transpose();
  if (cache) { cache->cls_in = cls; }

  TokenSequence<Scalar> next;
  next.grid = conv3x3_output_shape(out.grid, 2);
  next.tokens.resize(reduced.rows() + 1, reduced.cols());
  if (down.cls_proj.size() > 0) {
    next.tokens.row(0) = (down.cls_proj * cls).transpose();
  } else {
    next.tokens.row(0) = cls.transpose();
  }
  next.tokens.bottomRows(reduced.rows()) = reduced;
  return next;
}

template <typename Scalar> Vector<Scalar> head_logits(Vector<Scalar> const &cls, ClassifierHead<Scalar> const &head)
{
  if (cls.size() != head.weight.cols()) {
    throw DimensionError(fmt::format("classify: embedding dim {} vs head dim {}", cls.size(), head.weight.cols()));
  }
  return head.weight * cls + head.bias;
}

template <typename Scalar> Vector<Scalar> classify(Vector<Scalar> const &cls, ClassifierHead<Scalar> const &head)
{
  return softmax<Scalar>(head_logits(cls, head));
}

template <typename Scalar>
Vector<Scalar> forward_logits(GcVit<Scalar> const &model, ImageTensor const &image, ForwardCache<Scalar> *cache)
{
  if (cache) { cache->stages.resize(model.stages.size()); }
  TokenSequence<Scalar> seq = patch_embed(image, model.config, model.embed, cache ? &cache->embed : nullptr);
  for (std::size_t s = 0; s < model.stages.size(); ++s) {
    seq = stage_forward(seq, model.stages[s], cache ? &cache->stages[s] : nullptr);
  }
  Matrix<Scalar> const cls_row = seq.tokens.topRows(1);
  Vector<Scalar> const z = layer_norm(cls_row, model.final_norm, cache ? &cache->final_norm : nullptr).transpose();
  Vector<Scalar> logits = head_logits(z, model.head);
  if (!logits.allFinite()) { throw NumericalError("forward: non-finite logits"); }
  if (cache) { cache->cls_normed = z; }
  return logits;
}

template <typename Scalar> Vector<Scalar> forward(GcVit<Scalar> const &model, ImageTensor const &image)
{
  return softmax<Scalar>(forward_logits(model, image));
}

// ---- backward -----------------------------------------------------------------------------

template <typename Scalar>
Matrix<Scalar> block_backward(BlockCache<Scalar> const &c, Block<Scalar> const &block, Index heads, Matrix<Scalar> const &grad, Block<Scalar> &g)
{
  // MLP branch
  g.mlp.w2.noalias() += c.hidden.transpose() * grad;
  g.mlp.b2 += grad.colwise().sum().transpose();
  Matrix<Scalar> const dhidden = gelu_backward(c.hidden_pre, Matrix<Scalar>(grad * block.mlp.w2.transpose()));
  g.mlp.w1.noalias() += c.normed2.transpose() * dhidden;
  g.mlp.b1 += dhidden.colwise().sum().transpose();
  Matrix<Scalar> dx = grad + layer_norm_backward(c.norm2, block.norm2, Matrix<Scalar>(dhidden * block.mlp.w1.transpose()), g.norm2);

  // attention branch
  AttentionGrads<Scalar> ag = gc_attention_backward(c.attn, block.attn, heads, dx);
  g.attn.wq += ag.params.wq;
  g.attn.wk += ag.params.wk;
  g.attn.wv += ag.params.wv;
  g.attn.wg += ag.params.wg;
  g.attn.wgk += ag.params.wgk;
  g.attn.wgv += ag.params.wgv;
  dx += layer_norm_backward(c.norm1, block.norm1, ag.tokens, g.norm1);
  return dx;
}

template <typename Scalar>
void backward(GcVit<Scalar> const &model, ForwardCache<Scalar> const &cache, Vector<Scalar> const &grad_logits, GcVit<Scalar> &grads)
{
  grads.head.weight.noalias() += grad_logits * cache.cls_normed.transpose();
  grads.head.bias += grad_logits;
  Matrix<Scalar> const dz = (model.head.weight.transpose() * grad_logits).transpose();
  Matrix<Scalar> const dcls = layer_norm_backward(cache.final_norm, model.final_norm, dz, grads.final_norm);

  // gradient w.r.t. the token matrix leaving the last stage: only the CLS row is read
  auto const &last_grid = [&] {
    MapShape grid{model.config.grid_height(), model.config.grid_width()};
    for (std::size_t s = 0; s + 1 < model.stages.size(); ++s) { grid = conv3x3_output_shape(grid, 2); }
    return grid;
  }();
  Matrix<Scalar> dtokens = Matrix<Scalar>::Zero(last_grid.size() + 1, dcls.cols());
  dtokens.row(0) = dcls.row(0);

  for (std::size_t s = model.stages.size(); s-- > 0;) {
    Stage<Scalar> const &stage = model.stages[s];
    StageCache<Scalar> const &sc = cache.stages[s];
    Stage<Scalar> &sg = grads.stages[s];
    if (stage.downsample) {
      Downsample<Scalar> const &down = *stage.downsample;
      Index const n_out = dtokens.rows() - 1;
      Matrix<Scalar> const dpatches =
        conv3x3_backward(sc.downsample, 2, down.conv, Matrix<Scalar>(dtokens.bottomRows(n_out)), sg.downsample->conv);
      Vector<Scalar> dcls_in = dtokens.row(0).transpose();
      if (down.cls_proj.size() > 0) {
        sg.downsample->cls_proj.noalias() += dcls_in * sc.cls_in.transpose();
        dcls_in = down.cls_proj.transpose() * dcls_in;
      }
      Matrix<Scalar> din(dpatches.rows() + 1, dpatches.cols());
      din.row(0) = dcls_in.transpose();
      din.bottomRows(dpatches.rows()) = dpatches;
      dtokens = std::move(din);
    }
    for (std::size_t b = stage.blocks.size(); b-- > 0;) {
      dtokens = block_backward(sc.blocks[b], stage.blocks[b], stage.heads, dtokens, sg.blocks[b]);
    }
  }

  // patch embedding
  PatchEmbedCache<Scalar> const &ec = cache.embed;
  PatchEmbedParams<Scalar> &eg = grads.embed;
  Index const n = dtokens.rows() - 1;
  eg.cls += dtokens.row(0).transpose();
  auto const dpatch_tokens = dtokens.bottomRows(n);
  eg.positional += dpatch_tokens;
  eg.projection.noalias() += dpatch_tokens.transpose() * ec.patches;
  Matrix<Scalar> const dpatches = dpatch_tokens * model.embed.projection;

  Index const ps = model.config.patch_size;
  Index const s = model.config.stem_channels;
  Index const gw = ec.image.width / ps;
  Matrix<Scalar> da2(ec.image.size(), s);
  for (Index gy = 0; gy < ec.image.height / ps; ++gy) {
    for (Index gx = 0; gx < gw; ++gx) {
      for (Index py = 0; py < ps; ++py) {
        for (Index px = 0; px < ps; ++px) {
          Index const pixel = (gy * ps + py) * ec.image.width + gx * ps + px;
          da2.row(pixel) = dpatches.block(gy * gw + gx, (py * ps + px) * s, 1, s);
        }
      }
    }
  }
  Matrix<Scalar> const dpre2 = gelu_backward(ec.pre2, da2);
  Matrix<Scalar> const da1 = conv3x3_backward(ec.conv2, 1, model.embed.stem.conv2, dpre2, eg.stem.conv2);
  Matrix<Scalar> const dpre1 = gelu_backward(ec.pre1, da1);
  // the input image is not a parameter; only the weight gradients of conv1 are needed
  eg.stem.conv1.weight.noalias() += ec.conv1.columns.transpose() * dpre1;
  eg.stem.conv1.bias += dpre1.colwise().sum().transpose();
}

#define GCVIT_INSTANTIATE(Scalar)                                                                                      \
  template GcVit<Scalar> init_model(ModelConfig const &, std::uint64_t);                                              \
  template GcVit<Scalar> zero_model(ModelConfig const &);                                                             \
  template GcVit<Scalar> zeros_like(GcVit<Scalar> const &);                                                            \
  template TokenSequence<Scalar> patch_embed(ImageTensor const &, ModelConfig const &, PatchEmbedParams<Scalar> const &, \
                                             PatchEmbedCache<Scalar> *);                                               \
  template Matrix<Scalar> block_forward(Matrix<Scalar> const &, Block<Scalar> const &, Index, BlockCache<Scalar> *);    \
  template TokenSequence<Scalar> stage_forward(TokenSequence<Scalar> const &, Stage<Scalar> const &, StageCache<Scalar> *); \
  template Vector<Scalar> head_logits(Vector<Scalar> const &, ClassifierHead<Scalar> const &);                        \
  template Vector<Scalar> classify(Vector<Scalar> const &, ClassifierHead<Scalar> const &);                           \
  template Vector<Scalar> forward_logits(GcVit<Scalar> const &, ImageTensor const &, ForwardCache<Scalar> *);          \
  template Vector<Scalar> forward(GcVit<Scalar> const &, ImageTensor const &);                                        \
  template Matrix<Scalar> block_backward(BlockCache<Scalar> const &, Block<Scalar> const &, Index, Matrix<Scalar> const &, \
                                         Block<Scalar> &);                                                             \
  template void backward(GcVit<Scalar> const &, ForwardCache<Scalar> const &, Vector<Scalar> const &, GcVit<Scalar> &);

GCVIT_INSTANTIATE(float)
GCVIT_INSTANTIATE(double)

#undef GCVIT_INSTANTIATE

template GcVit<float> cast_model(GcVit<double> const &);
template GcVit<double> cast_model(GcVit<float> const &);
template GcVit<float> cast_model(GcVit<float> const &);
template GcVit<double> cast_model(GcVit<double> const &);

} // namespace gcvit
