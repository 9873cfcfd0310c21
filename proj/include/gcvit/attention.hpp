#pragma once

#include "gcvit/types.hpp"

#include <vector>

namespace gcvit {

// Projections for one global-context attention layer of width D. All products are row-major
// token conventions: Q = X * wq, and the fused key is K + g^T * wgk broadcast over rows.
template <typename Scalar> struct AttentionParams
{
  Matrix<Scalar> wq, wk, wv;
  Vector<Scalar> wg;
  Matrix<Scalar> wgk, wgv;

  static AttentionParams zeros(Index dim);
  Index dim() const { return wq.rows(); }
};

template <typename Scalar> struct GlobalContext
{
  Vector<Scalar> g;     // D
  Vector<Scalar> alpha; // N, a probability vector
};

// Softmax-weighted aggregate of the N patch tokens (rows of `patches`), weights from patches * wg.
template <typename Scalar> GlobalContext<Scalar> global_context(Matrix<Scalar> const &patches, Vector<Scalar> const &wg);

template <typename Scalar> struct AttentionCache
{
  Matrix<Scalar> x;
  Matrix<Scalar> q, k_tilde, v_tilde;
  GlobalContext<Scalar> context;
  std::vector<Matrix<Scalar>> probs; // one (N+1) x (N+1) row-stochastic matrix per head
};

// Multi-head global-context attention over `tokens` ((N+1) x D, row 0 is the CLS token, which
// attends and is attended to but is left out of the context aggregation). With no patch rows the
// context vector is zero.
template <typename Scalar>
Matrix<Scalar> gc_attention(Matrix<Scalar> const &tokens, AttentionParams<Scalar> const &p, Index heads,
                            AttentionCache<Scalar> *cache = nullptr);

// Plain multi-head softmax(Q K^T / sqrt(d_k)) V on already projected inputs.
template <typename Scalar>
Matrix<Scalar> scaled_dot_product_attention(Matrix<Scalar> const &q, Matrix<Scalar> const &k, Matrix<Scalar> const &v, Index heads);

template <typename Scalar> struct AttentionGrads
{
  Matrix<Scalar> tokens;
  AttentionParams<Scalar> params;
};

template <typename Scalar>
AttentionGrads<Scalar> gc_attention_backward(AttentionCache<Scalar> const &cache, AttentionParams<Scalar> const &p,
                                             Index heads, Matrix<Scalar> const &grad);

extern template struct AttentionParams<float>;
extern template struct AttentionParams<double>;

} // namespace gcvit
