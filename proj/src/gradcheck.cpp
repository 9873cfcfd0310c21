#include "gcvit/gradcheck.hpp"

#include "gcvit/attention.hpp"
#include "gcvit/image.hpp"
#include "gcvit/loss.hpp"
#include "gcvit/model.hpp"
#include "gcvit/random.hpp"
#include "gcvit/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace gcvit {

namespace {

using Mat = Matrix<double>;

void fill_normal(double *data, Index n, Rng &rng, double std)
{
  for (Index i = 0; i < n; ++i) { data[i] = std * rng.normal(); }
}

// Compares analytic entries against central differences of `loss`, perturbing `data[i]` in place.
void compare(GradCheckResult &res, std::string const &tensor, double *data, double const *analytic,
             std::vector<Index> const &indices, std::function<double()> const &loss, GradCheckOptions const &opts)
{
  double const scale = opts.corrupt_gradient ? 1.5 : 1.0;
  for (Index const i : indices) {
    double const saved = data[i];
    data[i] = saved + opts.step;
    double const plus = loss();
    data[i] = saved - opts.step;
    double const minus = loss();
    data[i] = saved;
    double const numeric = (plus - minus) / (2.0 * opts.step);
    double const err = relative_error(scale * analytic[i], numeric);
    ++res.checked;
    if (err >= res.max_relative_error) {
      res.max_relative_error = err;
      res.worst_entry = fmt::format("{}[{}]", tensor, i);
    }
  }
}

std::vector<Index> all_indices(Index n)
{
  std::vector<Index> idx(std::size_t(n), 0);
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

std::vector<Index> sample_indices(Index n, Index k, Rng &rng)
{
  if (n <= k) { return all_indices(n); }
  std::vector<Index> idx;
  while (Index(idx.size()) < k) {
    auto const i = Index(rng.below(std::uint64_t(n)));
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) { idx.push_back(i); }
  }
  return idx;
}

} // namespace

double relative_error(double analytic, double numeric)
{
  double const denom = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult check_attention(GradCheckOptions const &opts)
{
  Index const tokens = 7, dim = 8, heads = 2;
  Rng rng(derive_seed(opts.seed, "gradcheck-attention"));
  Mat x(tokens, dim);
  fill_normal(x.data(), x.size(), rng, 1.0);
  AttentionParams<double> p = AttentionParams<double>::zeros(dim);
  for (Mat *m : {&p.wq, &p.wk, &p.wv, &p.wgk, &p.wgv}) { fill_normal(m->data(), m->size(), rng, 0.5); }
  fill_normal(p.wg.data(), p.wg.size(), rng, 0.5);
  Mat r(tokens, dim);
  fill_normal(r.data(), r.size(), rng, 1.0);

  auto loss = [&] { return gc_attention(x, p, heads).cwiseProduct(r).sum(); };
  AttentionCache<double> cache;
  gc_attention(x, p, heads, &cache);
  AttentionGrads<double> const g = gc_attention_backward(cache, p, heads, r);

  GradCheckResult res{"gc_attention", 0.0, "", opts.attention_tolerance, 0};
  compare(res, "X", x.data(), g.tokens.data(), all_indices(x.size()), loss, opts);
  compare(res, "W_Q", p.wq.data(), g.params.wq.data(), all_indices(p.wq.size()), loss, opts);
  compare(res, "W_K", p.wk.data(), g.params.wk.data(), all_indices(p.wk.size()), loss, opts);
  compare(res, "W_V", p.wv.data(), g.params.wv.data(), all_indices(p.wv.size()), loss, opts);
  compare(res, "w_g", p.wg.data(), g.params.wg.data(), all_indices(p.wg.size()), loss, opts);
  compare(res, "W_GK", p.wgk.data(), g.params.wgk.data(), all_indices(p.wgk.size()), loss, opts);
  compare(res, "W_GV", p.wgv.data(), g.params.wgv.data(), all_indices(p.wgv.size()), loss, opts);
  return res;
}

GradCheckResult check_smoothed_cross_entropy(GradCheckOptions const &opts)
{
  Index const classes = 5, label = 2;
  double const eps = 0.1;
  Rng rng(derive_seed(opts.seed, "gradcheck-loss"));
  Vector<double> z(classes);
  fill_normal(z.data(), classes, rng, 2.0);
  Vector<double> const g = smoothed_cross_entropy_backward(z, label, eps);
  GradCheckResult res{"smoothed_cross_entropy", 0.0, "", opts.loss_tolerance, 0};
  compare(res, "logits", z.data(), g.data(), all_indices(classes), [&] { return smoothed_cross_entropy(z, label, eps); },
          opts);
  return res;
}

GradCheckResult check_end_to_end(GradCheckOptions const &opts)
{
  ModelConfig const &cfg = opts.model;
  cfg.validate();
  GcVit<double> model = init_model<double>(cfg, opts.seed);
  // Move away from the init so LayerNorm affine terms and biases carry non-trivial gradients.
  Rng rng(derive_seed(opts.seed, "gradcheck-model"));
  for (auto const &t : parameters(model)) {
    for (Index i = 0; i < t.size(); ++i) { t.data[i] += 0.05 * rng.normal(); }
  }
  Index const side = cfg.input_height;
  ImageTensor image = synth_image(0, std::min<Index>(cfg.num_classes, kMaxSynthClasses), side, opts.seed);
  if (cfg.input_width != side) { image = resize_bilinear(image, cfg.input_height, cfg.input_width); }
  image = normalize(image);
  Index const label = cfg.num_classes > 1 ? 1 : 0;
  double const eps = 0.1;

  ForwardCache<double> cache;
  Vector<double> const logits = forward_logits(model, image, &cache);
  GcVit<double> grads = zeros_like(model);
  backward(model, cache, smoothed_cross_entropy_backward(logits, label, eps), grads);

  auto loss = [&] { return smoothed_cross_entropy(forward_logits(model, image), label, eps); };
  GradCheckResult res{"end_to_end", 0.0, "", opts.end_to_end_tolerance, 0};
  auto const params = parameters(model);
  auto const grad_refs = parameters(grads);
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto const idx = sample_indices(params[t].size(), opts.samples_per_tensor, rng);
    compare(res, params[t].name, params[t].data, grad_refs[t].data, idx, loss, opts);
  }
  return res;
}

std::vector<GradCheckResult> run_gradcheck(GradCheckOptions const &opts)
{
  return {check_attention(opts), check_smoothed_cross_entropy(opts), check_end_to_end(opts)};
}

} // namespace gcvit
