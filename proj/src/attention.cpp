#include "gcvit/attention.hpp"

#include "gcvit/layers.hpp"

#include <fmt/format.h>

namespace gcvit {

template <typename Scalar> AttentionParams<Scalar> AttentionParams<Scalar>::zeros(Index dim)
{
  return {Matrix<Scalar>::Zero(dim, dim), Matrix<Scalar>::Zero(dim, dim), Matrix<Scalar>::Zero(dim, dim),
          Vector<Scalar>::Zero(dim),      Matrix<Scalar>::Zero(dim, dim), Matrix<Scalar>::Zero(dim, dim)};
}

template <typename Scalar> GlobalContext<Scalar> global_context(Matrix<Scalar> const &patches, Vector<Scalar> const &wg)
{
  if (patches.rows() < 1) { throw DimensionError("global_context: at least one patch token is required"); }
  if (patches.cols() != wg.size()) {
    throw DimensionError(fmt::format("global_context: token dim {} vs aggregation dim {}", patches.cols(), wg.size()));
  }
  GlobalContext<Scalar> ctx;
  ctx.alpha = softmax<Scalar>(patches * wg);
  ctx.g = patches.transpose() * ctx.alpha;
  return ctx;
}

namespace {

template <typename Scalar> void check_shapes(Matrix<Scalar> const &tokens, AttentionParams<Scalar> const &p, Index heads)
{
  Index const d = p.dim();
  bool const square = p.wq.cols() == d && p.wk.rows() == d && p.wk.cols() == d && p.wv.rows() == d &&
                      p.wv.cols() == d && p.wgk.rows() == d && p.wgk.cols() == d && p.wgv.rows() == d &&
                      p.wgv.cols() == d && p.wg.size() == d;
  if (!square) { throw DimensionError("gc_attention: inconsistent projection shapes"); }
  if (tokens.cols() != d || tokens.rows() < 1) {
    throw DimensionError(fmt::format("gc_attention: tokens {}x{} vs width {}", tokens.rows(), tokens.cols(), d));
  }
  if (heads < 1 || d % heads != 0) {
    throw DimensionError(fmt::format("gc_attention: width {} not divisible into {} heads", d, heads));
  }
}

template <typename Scalar>
Matrix<Scalar> multi_head(Matrix<Scalar> const &q, Matrix<Scalar> const &k, Matrix<Scalar> const &v, Index heads,
                          std::vector<Matrix<Scalar>> *probs)
{
  Index const dk = q.cols() / heads;
  Scalar const scale = Scalar(1) / std::sqrt(Scalar(dk));
  Matrix<Scalar> out(q.rows(), q.cols());
  if (probs) { probs->resize(heads); }
  for (Index h = 0; h < heads; ++h) {
    auto const qh = q.middleCols(h * dk, dk);
    auto const kh = k.middleCols(h * dk, dk);
    Matrix<Scalar> a = scale * (qh * kh.transpose());
    softmax_rows_inplace(a);
    out.middleCols(h * dk, dk).noalias() = a * v.middleCols(h * dk, dk);
    if (probs) { (*probs)[h] = std::move(a); }
  }
  return out;
}

} // namespace

template <typename Scalar>
Matrix<Scalar> gc_attention(Matrix<Scalar> const &tokens, AttentionParams<Scalar> const &p, Index heads, AttentionCache<Scalar> *cache)
{
  check_shapes(tokens, p, heads);
  Index const n = tokens.rows() - 1;
  GlobalContext<Scalar> ctx;
  if (n > 0) {
    ctx = global_context<Scalar>(tokens.bottomRows(n), p.wg);
  } else {
    ctx.g = Vector<Scalar>::Zero(p.dim());
  }
  Matrix<Scalar> q = tokens * p.wq;
  Matrix<Scalar> k = tokens * p.wk;
  Matrix<Scalar> v = tokens * p.wv;
  RowVector<Scalar> const k_ctx = ctx.g.transpose() * p.wgk;
  RowVector<Scalar> const v_ctx = ctx.g.transpose() * p.wgv;
  k.rowwise() += k_ctx;
  v.rowwise() += v_ctx;

  std::vector<Matrix<Scalar>> probs;
  Matrix<Scalar> out = multi_head(q, k, v, heads, cache ? &probs : nullptr);
  if (!out.allFinite()) { throw NumericalError("gc_attention: non-finite output"); }
  if (cache) {
    cache->x = tokens;
    cache->q = std::move(q);
    cache->k_tilde = std::move(k);
    cache->v_tilde = std::move(v);
    cache->context = std::move(ctx);
    cache->probs = std::move(probs);
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> scaled_dot_product_attention(Matrix<Scalar> const &q, Matrix<Scalar> const &k, Matrix<Scalar> const &v, Index heads)
{
  if (q.cols() != k.cols() || k.cols() != v.cols() || k.rows() != v.rows() || heads < 1 || q.cols() % heads != 0) {
    throw DimensionError("scaled_dot_product_attention: shape mismatch");
  }
  return multi_head<Scalar>(q, k, v, heads, nullptr);
}

template <typename Scalar>
AttentionGrads<Scalar> gc_attention_backward(AttentionCache<Scalar> const &cache, AttentionParams<Scalar> const &p,
                                             Index heads, Matrix<Scalar> const &grad)
{
  Index const rows = cache.x.rows();
  Index const d = p.dim();
  Index const dk = d / heads;
  Index const n = rows - 1;
  Scalar const scale = Scalar(1) / std::sqrt(Scalar(dk));
  if (grad.rows() != rows || grad.cols() != d) { throw DimensionError("gc_attention_backward: gradient shape mismatch"); }

  Matrix<Scalar> dq(rows, d), dk_tilde(rows, d), dv_tilde(rows, d);
  for (Index h = 0; h < heads; ++h) {
    Matrix<Scalar> const &a = cache.probs[h];
    auto const go = grad.middleCols(h * dk, dk);
    Matrix<Scalar> const da = go * cache.v_tilde.middleCols(h * dk, dk).transpose();
    dv_tilde.middleCols(h * dk, dk).noalias() = a.transpose() * go;
    Matrix<Scalar> const ds = scale * softmax_rows_backward(a, da);
    dq.middleCols(h * dk, dk).noalias() = ds * cache.k_tilde.middleCols(h * dk, dk);
    dk_tilde.middleCols(h * dk, dk).noalias() = ds.transpose() * cache.q.middleCols(h * dk, dk);
  }

  AttentionGrads<Scalar> out;
  out.params.wq = cache.x.transpose() * dq;
  out.params.wk = cache.x.transpose() * dk_tilde;
  out.params.wv = cache.x.transpose() * dv_tilde;

  // The context row is broadcast to every token, so its gradient is the column sum.
  Vector<Scalar> const dk_ctx = dk_tilde.colwise().sum().transpose();
  Vector<Scalar> const dv_ctx = dv_tilde.colwise().sum().transpose();
  Vector<Scalar> const &g = cache.context.g;
  out.params.wgk = g * dk_ctx.transpose();
  out.params.wgv = g * dv_ctx.transpose();
  Vector<Scalar> const dg = p.wgk * dk_ctx + p.wgv * dv_ctx;

  out.tokens = dq * p.wq.transpose() + dk_tilde * p.wk.transpose() + dv_tilde * p.wv.transpose();
  out.params.wg = Vector<Scalar>::Zero(d);
  if (n > 0) {
    auto const patches = cache.x.bottomRows(n);
    Vector<Scalar> const &alpha = cache.context.alpha;
    // g = sum_i alpha_i x_i with alpha = softmax(X wg)
    Vector<Scalar> const dalpha = patches * dg;
    Vector<Scalar> const dscore = (alpha.array() * (dalpha.array() - alpha.dot(dalpha))).matrix();
    out.params.wg = patches.transpose() * dscore;
    out.tokens.bottomRows(n) += alpha * dg.transpose() + dscore * p.wg.transpose();
  }
  return out;
}

#define GCVIT_INSTANTIATE(Scalar)                                                                                      \
  template struct AttentionParams<Scalar>;                                                                             \
  template GlobalContext<Scalar> global_context(Matrix<Scalar> const &, Vector<Scalar> const &);                      \
  template Matrix<Scalar> gc_attention(Matrix<Scalar> const &, AttentionParams<Scalar> const &, Index,                 \
                                       AttentionCache<Scalar> *);                                                      \
  template Matrix<Scalar> scaled_dot_product_attention(Matrix<Scalar> const &, Matrix<Scalar> const &,                 \
                                                       Matrix<Scalar> const &, Index);                                 \
  template AttentionGrads<Scalar> gc_attention_backward(AttentionCache<Scalar> const &, AttentionParams<Scalar> const &, \
                                                        Index, Matrix<Scalar> const &);

GCVIT_INSTANTIATE(float)
GCVIT_INSTANTIATE(double)

#undef GCVIT_INSTANTIATE

} // namespace gcvit
