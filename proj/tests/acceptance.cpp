// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the number of failures.

#include "gcvit/attention.hpp"
#include "gcvit/dataset.hpp"
#include "gcvit/evaluate.hpp"
#include "gcvit/loss.hpp"
#include "gcvit/metrics.hpp"
#include "gcvit/schedule.hpp"
#include "gcvit/synth.hpp"
#include "gcvit/trainer.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace gcvit;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(bool ok, std::string const &name, std::string const &detail)
{
  fmt::print("[{}] {}: {}\n", ok ? "PASS" : "FAIL", name, detail);
  std::fflush(stdout);
  if (!ok) { ++failures; }
}

std::string slurp(fs::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::string const &args, fs::path const &log)
{
  std::string const cmd = fmt::format("{} {} > {} 2>&1", GCVIT_CLI, args, log.string());
  int const status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix<double> random_matrix(Index rows, Index cols, Rng &rng, double scale)
{
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) { m.data()[i] = scale * rng.normal(); }
  return m;
}

// ---------------------------------------------------------------------------------------------

void gradient_verification(fs::path const &work)
{
  fs::path const log = work / "gradcheck.txt";
  auto const t0 = std::chrono::steady_clock::now();
  int const code = run_cli("gradcheck --seed 0", log);
  double const secs = seconds_since(t0);
  std::string const out = slurp(log);
  std::regex const line(R"((\w+)\s+max_rel_error ([0-9.e+-]+))");
  std::string detail;
  bool parsed = true;
  std::map<std::string, double> errors;
  for (std::sregex_iterator it(out.begin(), out.end(), line), end; it != end; ++it) {
    errors[(*it)[1]] = std::stod((*it)[2]);
  }
  double const limits[] = {1e-4, 1e-4, 1e-3};
  char const *names[] = {"gc_attention", "smoothed_cross_entropy", "end_to_end"};
  bool within = true;
  for (int i = 0; i < 3; ++i) {
    if (!errors.count(names[i])) {
      parsed = false;
      continue;
    }
    within = within && errors[names[i]] < limits[i];
    detail += fmt::format("{} {:.2e} (< {:.0e}), ", names[i], errors[names[i]], limits[i]);
  }
  detail += fmt::format("exit {}, {:.1f}s (< 120s)", code, secs);
  verdict(code == 0 && parsed && within && secs < 120.0, "gradient verification", detail);
}

void reduction_equivalence()
{
  Rng rng(derive_seed(2024, "acceptance-reduction"));
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Index const d = 16, heads = 1 + Index(rng.below(2)) * 3; // 1 or 4 heads
    Index const n = 1 + 1 + Index(rng.below(8));
    AttentionParams<double> p = AttentionParams<double>::zeros(d);
    p.wq = random_matrix(d, d, rng, 0.5);
    p.wk = random_matrix(d, d, rng, 0.5);
    p.wv = random_matrix(d, d, rng, 0.5);
    for (Index i = 0; i < d; ++i) { p.wg(i) = rng.normal(); }
    Matrix<double> const x = random_matrix(n, d, rng, 1.0);
    Matrix<double> const y = gc_attention(x, p, heads);
    Matrix<double> const ref = scaled_dot_product_attention<double>(x * p.wq, x * p.wk, x * p.wv, heads);
    worst = std::max(worst, (y - ref).cwiseAbs().maxCoeff());
  }
  verdict(worst <= 1e-6, "reduction equivalence", fmt::format("100 instances, max |diff| {:.2e} (<= 1e-6)", worst));
}

void schedule_exactness()
{
  bool ok = true;
  double worst = 0.0;
  bool endpoints = true;
  for (double total : {100.0, 200.0, 8.0}) {
    for (auto [lo, hi] : {std::pair{0.0, 1e-4}, std::pair{1e-6, 1e-3}}) {
      for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        double const t = frac * total;
        double const closed = lo + 0.5 * (hi - lo) * (1.0 + std::cos(t * std::numbers::pi / total));
        worst = std::max(worst, std::abs(cosine_lr(t, total, lo, hi) - closed));
      }
      endpoints = endpoints && cosine_lr(0, total, lo, hi) == hi && cosine_lr(total, total, lo, hi) == lo;
    }
  }
  ok = worst <= 1e-12 && endpoints;
  verdict(ok, "schedule exactness",
          fmt::format("max |diff| {:.2e} (<= 1e-12) at t in {{0,T/4,T/2,3T/4,T}}, endpoints exact: {}", worst, endpoints));
}

void loss_sanity()
{
  double worst_uniform = 0.0;
  for (Index c : {2, 3, 12}) {
    for (double z : {0.0, 3.5, -20.0}) {
      for (double eps : {0.0, 0.1}) {
        Vector<double> const logits = Vector<double>::Constant(c, z);
        worst_uniform = std::max(worst_uniform, std::abs(smoothed_cross_entropy(logits, c - 1, eps) - std::log(double(c))));
      }
    }
  }
  Rng rng(derive_seed(2024, "acceptance-loss"));
  double worst_sum = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Index const c = 2 + Index(rng.below(11));
    Vector<double> logits(c);
    for (Index k = 0; k < c; ++k) { logits(k) = 5.0 * rng.normal(); }
    Vector<double> const g = smoothed_cross_entropy_backward(logits, Index(rng.below(std::uint64_t(c))), 0.1);
    worst_sum = std::max(worst_sum, std::abs(g.sum()));
  }
  verdict(worst_uniform <= 1e-9 && worst_sum <= 1e-9, "loss sanity",
          fmt::format("|CE - ln C| max {:.2e} for C in {{2,3,12}}, |sum grad| max {:.2e} (both <= 1e-9)", worst_uniform,
                      worst_sum));
}

void split_fidelity()
{
  // Per-breed train+val counts: Oxford-IIIT cat breed totals minus the test-set supports.
  std::vector<std::int64_t> const counts{100, 100, 100, 96, 100, 93, 100, 100, 100, 100, 99, 100};
  DatasetManifest m;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    m.class_names.push_back(fmt::format("breed_{:02d}", c));
    for (std::int64_t i = 0; i < counts[c]; ++i) { m.entries.push_back({fmt::format("breed_{:02d}/{:03d}.ppm", c, i), Index(c), {}}); }
  }
  SplitSpec const spec{0.8, 7, true};
  auto const [train, val] = stratified_split(m, spec);
  auto const [train2, val2] = stratified_split(m, spec);
  double worst = 0.0;
  auto const tc = train.counts();
  for (std::size_t c = 0; c < counts.size(); ++c) { worst = std::max(worst, std::abs(double(tc[c]) - 0.8 * double(counts[c]))); }
  bool const same = train == train2 && val == val2;
  bool const ok = m.entries.size() == 1188 && train.entries.size() == 950 && val.entries.size() == 238 && worst <= 1.0 && same;
  verdict(ok, "split fidelity",
          fmt::format("{} samples -> {}/{}, max per-class deviation {:.2f} (<= 1), rerun identical: {}", m.entries.size(),
                      train.entries.size(), val.entries.size(), worst, same));
}

void metrics_oracle()
{
  Rng rng(derive_seed(2024, "acceptance-metrics"));
  double worst = 0.0;
  bool counts_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    Index const c = 2 + Index(rng.below(11));
    Index const n = 1 + Index(rng.below(500));
    std::vector<Index> labels, preds;
    for (Index i = 0; i < n; ++i) {
      labels.push_back(Index(rng.below(std::uint64_t(c))));
      preds.push_back(rng.uniform() < 0.5 ? labels.back() : Index(rng.below(std::uint64_t(c))));
    }
    ConfusionMatrix const cm = confusion_matrix(preds, labels, c);
    ClassificationReport const r = report(cm);
    double correct = 0, mp = 0, mr = 0, mf = 0, wp = 0, wr = 0, wf = 0;
    for (Index k = 0; k < c; ++k) {
      double tp = 0, fp = 0, fn = 0;
      for (Index i = 0; i < n; ++i) {
        auto const l = labels[std::size_t(i)], p = preds[std::size_t(i)];
        tp += (l == k && p == k);
        fp += (l != k && p == k);
        fn += (l == k && p != k);
      }
      for (Index j = 0; j < c; ++j) {
        std::int64_t count = 0;
        for (Index i = 0; i < n; ++i) { count += labels[std::size_t(i)] == k && preds[std::size_t(i)] == j; }
        counts_ok = counts_ok && cm.counts(k, j) == count;
      }
      double const prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
      double const rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
      double const f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
      auto const &m = r.classes[std::size_t(k)];
      worst = std::max({worst, std::abs(m.precision - prec), std::abs(m.recall - rec), std::abs(m.f1 - f1)});
      counts_ok = counts_ok && m.support == std::int64_t(tp + fn);
      mp += prec / double(c);
      mr += rec / double(c);
      mf += f1 / double(c);
      wp += prec * (tp + fn) / double(n);
      wr += rec * (tp + fn) / double(n);
      wf += f1 * (tp + fn) / double(n);
      correct += tp;
    }
    worst = std::max({worst, std::abs(r.accuracy - correct / double(n)), std::abs(r.macro.precision - mp),
                      std::abs(r.macro.recall - mr), std::abs(r.macro.f1 - mf), std::abs(r.weighted.precision - wp),
                      std::abs(r.weighted.recall - wr), std::abs(r.weighted.f1 - wf)});
    counts_ok = counts_ok && r.total == n;
  }
  ConfusionMatrix ex;
  ex.counts = CountMatrix(2, 2);
  ex.counts << 1, 1, 0, 2;
  ex.class_names = {"0", "1"};
  ClassificationReport const r = report(ex);
  double const ex_err = std::max({std::abs(r.classes[0].precision - 1.0), std::abs(r.classes[1].precision - 2.0 / 3.0),
                                  std::abs(r.classes[0].recall - 0.5), std::abs(r.classes[1].recall - 1.0),
                                  std::abs(r.accuracy - 0.75)});
  verdict(worst <= 1e-9 && counts_ok && ex_err <= 1e-12, "metrics oracle",
          fmt::format("100 random sets: max |diff| {:.2e} (<= 1e-9), counts exact: {}; [[1,1],[0,2]] example error {:.1e}",
                      worst, counts_ok, ex_err));
}

void scaled_training(fs::path const &work)
{
  std::uint64_t const seed = 1;
  ModelConfig const cfg = desk_tiny(12);
  AugmentPolicy policy;
  policy.crop_size = cfg.input_height;
  TrainConfig tc;
  tc.batch_size = 8;
  tc.max_epochs = 200;
  tc.lr_max = 1e-3;
  tc.patience = 5;
  tc.seed = seed;

  std::clock_t const c0 = std::clock();
  auto const t0 = std::chrono::steady_clock::now();
  DatasetManifest const all = synth_dataset(work / "synth", 12, 8, cfg.input_height, seed);
  DatasetManifest const heldout = synth_dataset(work / "heldout", 12, 2, cfg.input_height, seed + 1000);
  auto const [train, val] = stratified_split(all, {0.8, seed, true});
  FitResult<float> const r = fit(init_model<float>(cfg, derive_seed(seed, "init")), train, val, policy, tc);
  Evaluation<float> const on_train = evaluate(r.best_model, train, policy);
  Evaluation<float> const on_heldout = evaluate(r.best_model, heldout, policy);
  double const cpu = double(std::clock() - c0) / CLOCKS_PER_SEC;
  double const wall = seconds_since(t0);

  auto const epochs = std::int64_t(r.records.size());
  bool const patience_ok = epochs <= r.best_epoch + tc.patience;
  bool const ok = on_train.report.accuracy == 1.0 && epochs <= 200 && on_heldout.report.accuracy >= 0.9 && cpu < 600.0 &&
                  patience_ok && on_heldout.report.total == 24;
  verdict(ok, "scaled training",
          fmt::format("train accuracy {:.4f} (= 1) after {} epochs (<= 200), held-out accuracy {:.4f} on {} images "
                      "(>= 0.90), CPU {:.0f}s / wall {:.0f}s (< 600s), best epoch {} + patience {} >= {} epochs run",
                      on_train.report.accuracy, epochs, on_heldout.report.accuracy, on_heldout.report.total, cpu, wall,
                      r.best_epoch, tc.patience, epochs));
}

void determinism(fs::path const &work)
{
  fs::path const data = work / "det_data";
  fs::path const log = work / "det_log.txt";
  bool ok = run_cli(fmt::format("synth --root {} --classes 12 --per-class 8 --size 64 --seed 5", data.string()), log) == 0;
  for (char const *run : {"run_a", "run_b"}) {
    fs::path const out = work / run;
    ok = ok && run_cli(fmt::format("prepare --deterministic --seed 9 --data-root {} --out {}", data.string(), (out / "prep").string()),
                       log) == 0;
    ok = ok && run_cli(fmt::format("train --deterministic --seed 9 --train {} --val {} --out {} --max-epochs 3 "
                                   "--batch-size 8 --lr-max 1e-3 -q",
                                   (out / "prep/train.csv").string(), (out / "prep/val.csv").string(), (out / "train").string()),
                       log) == 0;
    ok = ok && run_cli(fmt::format("eval --deterministic --checkpoint {} --manifest {} --out {}", (out / "train/checkpoint.bin").string(),
                                   (out / "prep/val.csv").string(), (out / "eval").string()),
                       log) == 0;
  }
  std::vector<std::string> const files{"prep/manifest.csv",  "prep/train.csv",      "prep/val.csv",
                                       "prep/split_summary.csv", "train/train_log.csv", "train/checkpoint.bin",
                                       "eval/report.csv",    "eval/report_full.csv", "eval/confusion.csv",
                                       "eval/per_class.csv", "eval/curves.csv"};
  std::size_t identical = 0;
  for (auto const &f : files) {
    std::string const a = slurp(work / "run_a" / f);
    if (!a.empty() && a == slurp(work / "run_b" / f)) { ++identical; }
  }
  verdict(ok && identical == files.size(), "determinism",
          fmt::format("prepare+train+eval twice: {}/{} output files byte-identical (manifests, epoch log, checkpoint, reports)",
                      identical, files.size()));
}

void shape_chain()
{
  ModelConfig const paper = paper_shaped(12);
  GcVit<float> const model = init_model<float>(paper, 1);
  ImageTensor const image = normalize(synth_image(0, 12, 224, 1));
  TokenSequence<float> t = patch_embed(image, paper, model.embed);
  Index const patches = t.num_patches();
  Index const rows = t.tokens.rows();
  for (auto const &stage : model.stages) { t = stage_forward(t, stage); }
  bool const paper_ok = patches == 196 && rows == 197 && t.grid == MapShape{7, 7} &&
                        stage_grids(paper).back() == std::pair<std::int64_t, std::int64_t>{7, 7};

  ModelConfig const four = four_stage_layout(12);
  GcVit<float> const model4 = init_model<float>(four, 1);
  TokenSequence<float> s = patch_embed(image, four, model4.embed);
  std::vector<std::string> chain{fmt::format("{}", s.grid.height)};
  bool closed_form = true;
  for (std::size_t k = 0; k < model4.stages.size(); ++k) {
    Index const expected = 224 / four.patch_size / (Index{1} << k);
    closed_form = closed_form && s.grid == MapShape{expected, expected};
    if (k + 1 < model4.stages.size()) {
      s = stage_forward(s, model4.stages[k]);
      chain.push_back(fmt::format("{}", s.grid.height));
    }
  }
  s = stage_forward(s, model4.stages.back());
  bool const four_ok = model4.stages.size() == 4 && closed_form && s.grid == MapShape{7, 7} && s.tokens.rows() == 50;
  verdict(paper_ok && four_ok, "shape chain",
          fmt::format("224x224 P=16: {} patch tokens + CLS, grid 14 -> {}x{}; four-stage layout: {} -> terminal {}x{} "
                      "(closed form 224/P/2^k)",
                      patches, t.grid.height, t.grid.width, fmt::join(chain, " -> "), s.grid.height, s.grid.width));
}

} // namespace

int main()
{
  fs::path const work = fs::temp_directory_path() / fmt::format("gcvit_acceptance_{}", ::getpid());
  fs::remove_all(work);
  fs::create_directories(work);

  auto guarded = [&](char const *name, auto &&fn) {
    try {
      fn();
    } catch (std::exception const &e) {
      verdict(false, name, fmt::format("threw: {}", e.what()));
    }
  };
  guarded("gradient verification", [&] { gradient_verification(work); });
  guarded("reduction equivalence", [] { reduction_equivalence(); });
  guarded("schedule exactness", [] { schedule_exactness(); });
  guarded("loss sanity", [] { loss_sanity(); });
  guarded("split fidelity", [] { split_fidelity(); });
  guarded("metrics oracle", [] { metrics_oracle(); });
  guarded("scaled training", [&] { scaled_training(work); });
  guarded("determinism", [&] { determinism(work); });
  guarded("shape chain", [] { shape_chain(); });

  fs::remove_all(work);
  fmt::print("{} of 9 criteria passed\n", 9 - failures);
  return failures;
}
