#include "gcvit/checkpoint.hpp"
#include "gcvit/evaluate.hpp"
#include "gcvit/export.hpp"
#include "gcvit/gradcheck.hpp"
#include "gcvit/synth.hpp"
#include "gcvit/trainer.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace gcvit;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

constexpr char const *kCheckpointFile = "checkpoint.bin";
constexpr char const *kTrainLogFile = "train_log.csv";

// Flags shared by train and eval/predict that override AugmentPolicy fields.
struct PolicyFlags
{
  std::string file;
  std::optional<std::int64_t> crop_size;
  std::optional<std::vector<double>> scale_range;
  std::optional<double> max_rotation;
  std::optional<double> hflip_prob;
  std::optional<std::vector<double>> jitter_limits;
  std::optional<std::vector<double>> normalization_mean;
  std::optional<std::vector<double>> normalization_std;

  void add(CLI::App *app)
  {
    app->add_option("--policy", file, "augmentation policy file (key = value lines)")->check(CLI::ExistingFile);
    app->add_option("--crop-size", crop_size, "square crop side fed to the model");
    app->add_option("--scale-range", scale_range, "random-area crop scale bounds")->expected(2);
    app->add_option("--max-rotation", max_rotation, "rotation bound in degrees");
    app->add_option("--hflip-prob", hflip_prob, "horizontal flip probability");
    app->add_option("--jitter-limits", jitter_limits, "brightness, contrast, saturation jitter")->expected(3);
    app->add_option("--normalization-mean", normalization_mean, "per-channel mean")->expected(3);
    app->add_option("--normalization-std", normalization_std, "per-channel std")->expected(3);
  }

  // defaults < policy file < flags
  AugmentPolicy resolve(AugmentPolicy policy) const
  {
    if (!file.empty()) { policy = load_policy(file); }
    if (crop_size) { policy.crop_size = *crop_size; }
    if (scale_range) { std::copy_n(scale_range->begin(), 2, policy.scale_range.begin()); }
    if (max_rotation) { policy.max_rotation = *max_rotation; }
    if (hflip_prob) { policy.hflip_prob = *hflip_prob; }
    if (jitter_limits) { std::copy_n(jitter_limits->begin(), 3, policy.jitter_limits.begin()); }
    if (normalization_mean) { std::copy_n(normalization_mean->begin(), 3, policy.normalization_mean.begin()); }
    if (normalization_std) { std::copy_n(normalization_std->begin(), 3, policy.normalization_std.begin()); }
    policy.validate();
    return policy;
  }

  bool file_sets_crop() const
  {
    if (file.empty()) { return false; }
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
      auto const start = line.find_first_not_of(" \t");
      if (start != std::string::npos && line.compare(start, 9, "crop_size") == 0) { return true; }
    }
    return false;
  }
};

struct ModelFlags
{
  std::string preset = "desk-tiny";
  std::optional<std::int64_t> input_height, input_width, patch_size, stem_channels, mlp_ratio, num_classes;
  std::optional<std::vector<std::int64_t>> stage_depths, stage_dims, num_heads;

  void add(CLI::App *app)
  {
    app->add_option("--preset", preset, "model preset")
        ->check(CLI::IsMember({"desk-tiny", "paper-shaped", "four-stage"}))
        ->capture_default_str();
    app->add_option("--input-height", input_height, "model input height (defaults to the crop size)");
    app->add_option("--input-width", input_width, "model input width (defaults to the crop size)");
    app->add_option("--patch-size", patch_size, "patch side P");
    app->add_option("--stem-channels", stem_channels, "channels of the convolutional stem");
    app->add_option("--stage-depths", stage_depths, "blocks per stage");
    app->add_option("--stage-dims", stage_dims, "width per stage");
    app->add_option("--num-heads", num_heads, "attention heads per stage");
    app->add_option("--mlp-ratio", mlp_ratio, "MLP hidden width multiplier");
    app->add_option("--num-classes", num_classes, "classifier outputs (defaults to the manifest)");
  }

  ModelConfig base(std::int64_t classes) const
  {
    if (preset == "paper-shaped") { return paper_shaped(classes); }
    if (preset == "four-stage") { return four_stage_layout(classes); }
    return desk_tiny(classes);
  }
};

struct Settings
{
  std::uint64_t seed = 0;
  bool deterministic = false;
  bool quiet = false;
};

void echo(std::string const &key, std::string const &value) { fmt::print(stderr, "config {} = {}\n", key, value); }

void echo_policy(AugmentPolicy const &policy)
{
  std::string const text = format_policy(policy);
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto const end = text.find('\n', pos);
    std::string const line = text.substr(pos, end - pos);
    if (!line.empty() && line[0] != '#') { fmt::print(stderr, "config policy.{}\n", line); }
    if (end == std::string::npos) { break; }
    pos = end + 1;
  }
}

void echo_json(std::string const &prefix, json const &j)
{
  for (auto const &[k, v] : j.items()) { echo(prefix + k, v.dump()); }
}

void echo_common(Settings const &s)
{
  echo("seed", std::to_string(s.seed));
  echo("deterministic", s.deterministic ? "true" : "false");
}

void make_dir(fs::path const &dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) { throw IoError(fmt::format("{}: cannot create directory: {}", dir.string(), ec.message())); }
}

// Runs config resolution; any validation failure there is a usage error.
template <typename Fn> auto resolve_or_usage(Fn &&fn)
{
  try {
    return fn();
  } catch (ConfigError const &) {
    throw;
  } catch (DimensionError const &e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------------------------------------

struct SynthArgs
{
  std::string root;
  std::int64_t classes = 12;
  std::int64_t per_class = 8;
  std::int64_t size = 64;
};

int cmd_synth(SynthArgs const &a, Settings const &s)
{
  echo_common(s);
  echo("classes", std::to_string(a.classes));
  echo("per_class", std::to_string(a.per_class));
  echo("size", std::to_string(a.size));
  DatasetManifest const m = synth_dataset(a.root, a.classes, a.per_class, a.size, s.seed);
  write_manifest(m, fs::path(a.root) / "manifest.csv");
  fmt::print("wrote {} images in {} classes to {}\n", m.entries.size(), m.num_classes(), a.root);
  return 0;
}

struct PrepareArgs
{
  std::string data_root;
  std::string out;
  double train_fraction = 0.8;
  bool stratified = true;
};

int cmd_prepare(PrepareArgs const &a, Settings const &s)
{
  SplitSpec const spec{a.train_fraction, s.seed, a.stratified};
  spec.validate();
  echo_common(s);
  echo("train_fraction", fmt::format("{}", spec.train_fraction));
  echo("stratified", spec.stratified ? "true" : "false");

  DatasetManifest const all = load_dataset(a.data_root);
  auto const [train, val] = stratified_split(all, spec);

  std::map<fs::path, std::string> split_of;
  for (auto const &e : train.entries) { split_of[e.path] = e.split; }
  for (auto const &e : val.entries) { split_of[e.path] = e.split; }
  DatasetManifest labelled = all;
  for (auto &e : labelled.entries) { e.split = split_of.at(e.path); }

  fs::path const out(a.out);
  make_dir(out);
  write_manifest(labelled, out / "manifest.csv");
  write_manifest(train, out / "train.csv");
  write_manifest(val, out / "val.csv");

  auto const total = all.counts();
  auto const tr = train.counts();
  auto const va = val.counts();
  std::string summary = "class,total,train,val\n";
  for (std::size_t c = 0; c < all.class_names.size(); ++c) {
    summary += fmt::format("{},{},{},{}\n", all.class_names[c], total[c], tr[c], va[c]);
  }
  summary += fmt::format("all,{},{},{}\n", all.entries.size(), train.entries.size(), val.entries.size());
  write_text(out / "split_summary.csv", summary);
  fmt::print("{}", summary);
  return 0;
}

struct TrainArgs
{
  std::string train_manifest;
  std::string val_manifest;
  std::string out;
  std::optional<std::int64_t> batch_size, max_epochs, patience;
  std::optional<double> lr_max, lr_min, weight_decay, label_smoothing, gamma;
  std::optional<std::string> schedule;
  std::optional<std::vector<double>> milestones;
  PolicyFlags policy;
  ModelFlags model;
};

TrainConfig resolve_train(TrainArgs const &a, Settings const &s)
{
  TrainConfig cfg;
  cfg.seed = s.seed;
  if (a.batch_size) { cfg.batch_size = *a.batch_size; }
  if (a.max_epochs) { cfg.max_epochs = *a.max_epochs; }
  if (a.patience) { cfg.patience = *a.patience; }
  if (a.lr_max) { cfg.lr_max = *a.lr_max; }
  if (a.lr_min) { cfg.lr_min = *a.lr_min; }
  if (a.weight_decay) { cfg.weight_decay = *a.weight_decay; }
  if (a.label_smoothing) { cfg.label_smoothing = *a.label_smoothing; }
  if (a.gamma) { cfg.gamma = *a.gamma; }
  if (a.schedule) { cfg.schedule = *a.schedule == "step" ? ScheduleKind::Step : ScheduleKind::Cosine; }
  if (a.milestones) { cfg.milestones = *a.milestones; }
  cfg.validate();
  return cfg;
}

ModelConfig resolve_model(ModelFlags const &f, AugmentPolicy &policy, bool crop_explicit, std::int64_t manifest_classes)
{
  if (f.num_classes && *f.num_classes != manifest_classes) {
    throw ConfigError(fmt::format("--num-classes {} does not match the {} classes in the manifest", *f.num_classes,
                                  manifest_classes));
  }
  ModelConfig cfg = f.base(manifest_classes);
  if (!crop_explicit) { policy.crop_size = cfg.input_height; }
  cfg.input_height = f.input_height.value_or(policy.crop_size);
  cfg.input_width = f.input_width.value_or(policy.crop_size);
  if (f.patch_size) { cfg.patch_size = *f.patch_size; }
  if (f.stem_channels) { cfg.stem_channels = *f.stem_channels; }
  if (f.mlp_ratio) { cfg.mlp_ratio = *f.mlp_ratio; }
  if (f.stage_depths) { cfg.stage_depths = *f.stage_depths; }
  if (f.stage_dims) { cfg.stage_dims = *f.stage_dims; }
  if (f.num_heads) { cfg.num_heads = *f.num_heads; }
  if (cfg.input_height != policy.crop_size || cfg.input_width != policy.crop_size) {
    throw ConfigError(fmt::format("model input {}x{} does not match crop size {}", cfg.input_height, cfg.input_width,
                                  policy.crop_size));
  }
  cfg.validate();
  return cfg;
}

json records_json(std::vector<EpochRecord> const &records)
{
  json arr = json::array();
  for (auto const &r : records) {
    arr.push_back({{"epoch", r.epoch},
                   {"train_loss", r.train_loss},
                   {"train_accuracy", r.train_accuracy},
                   {"val_loss", r.val_loss},
                   {"val_accuracy", r.val_accuracy},
                   {"learning_rate", r.learning_rate}});
  }
  return arr;
}

std::vector<EpochRecord> records_from_json(json const &arr)
{
  std::vector<EpochRecord> out;
  for (auto const &r : arr) {
    out.push_back({r.at("epoch").get<std::int64_t>(), r.at("train_loss").get<double>(), r.at("train_accuracy").get<double>(),
                   r.at("val_loss").get<double>(), r.at("val_accuracy").get<double>(), r.at("learning_rate").get<double>()});
  }
  return out;
}

int cmd_train(TrainArgs const &a, Settings const &s)
{
  DatasetManifest const train = read_manifest(a.train_manifest);
  DatasetManifest const val = read_manifest(a.val_manifest);
  if (train.entries.empty() || val.entries.empty()) { throw DatasetError("train and val manifests must be non-empty"); }
  if (val.num_classes() > train.num_classes()) {
    throw DatasetError(fmt::format("val manifest uses class ids up to {} but train only has {} classes",
                                   val.num_classes() - 1, train.num_classes()));
  }

  TrainConfig const cfg = resolve_or_usage([&] { return resolve_train(a, s); });
  AugmentPolicy policy = resolve_or_usage([&] { return a.policy.resolve(AugmentPolicy{}); });
  bool const crop_explicit = a.policy.crop_size.has_value() || a.policy.file_sets_crop();
  ModelConfig const model_cfg =
      resolve_or_usage([&] { return resolve_model(a.model, policy, crop_explicit, train.num_classes()); });

  echo_common(s);
  echo_json("model.", json(model_cfg));
  echo_json("train.", json(cfg));
  echo_policy(policy);

  fs::path const out(a.out);
  make_dir(out);
  std::uint64_t const init_seed = derive_seed(s.seed, "init");
  GcVit<float> const initial = init_model<float>(model_cfg, init_seed);
  fmt::print(stderr, "model parameters: {}\n", parameter_count(initial));

  std::ofstream log(out / kTrainLogFile, std::ios::binary | std::ios::trunc);
  if (!log) { throw IoError(fmt::format("{}: cannot open for writing", (out / kTrainLogFile).string())); }
  log << kCurvesHeader << '\n' << std::flush;

  auto const t0 = std::chrono::steady_clock::now();
  FitResult<float> const result = fit(initial, train, val, policy, cfg, [&](EpochRecord const &r) {
    log << format_curve_line(r) << std::flush;
    if (!s.quiet) {
      double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      fmt::print(stderr, "epoch {:>4}  loss {:.4f}  acc {:.4f}  val_loss {:.4f}  val_acc {:.4f}  lr {:.3e}  [{:.1f}s]\n", r.epoch,
                 r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy, r.learning_rate, secs);
    }
  });

  json meta;
  meta["class_names"] = train.class_names;
  meta["train_config"] = cfg;
  meta["policy"] = format_policy(policy);
  meta["seed"] = s.seed;
  meta["init_seed"] = init_seed;
  meta["best_epoch"] = result.best_epoch;
  meta["stopped_early"] = result.stopped_early;
  meta["records"] = records_json(result.records);
  save_checkpoint(out / kCheckpointFile, result.best_model, meta);

  json summary;
  summary["epochs_run"] = result.records.size();
  summary["best_epoch"] = result.best_epoch;
  summary["stopped_early"] = result.stopped_early;
  if (result.best_epoch > 0) {
    summary["best_val_accuracy"] = result.records[std::size_t(result.best_epoch - 1)].val_accuracy;
  }
  write_text(out / "summary.json", summary.dump(2) + "\n");
  write_text(out / "config.json",
             json{{"model", model_cfg}, {"train", cfg}, {"policy", format_policy(policy)}, {"seed", s.seed}}.dump(2) + "\n");

  if (result.records.empty()) {
    fmt::print("no epochs run; wrote initial checkpoint to {}\n", (out / kCheckpointFile).string());
  } else {
    fmt::print("epochs {}  best epoch {}  best val accuracy {:.4f}{}\n", result.records.size(), result.best_epoch,
               summary["best_val_accuracy"].get<double>(), result.stopped_early ? "  (early stop)" : "");
  }
  return 0;
}

// Eval/predict policy: the training policy stored in the checkpoint, then --policy, then flags.
AugmentPolicy checkpoint_policy(Checkpoint<float> const &ckpt, PolicyFlags const &flags)
{
  AugmentPolicy base;
  if (ckpt.metadata.contains("policy")) {
    base = parse_policy(ckpt.metadata["policy"].get<std::string>());
  } else {
    base.crop_size = ckpt.model.config.input_height;
  }
  return flags.resolve(base);
}

std::vector<std::string> checkpoint_classes(Checkpoint<float> const &ckpt)
{
  if (ckpt.metadata.contains("class_names")) { return ckpt.metadata["class_names"].get<std::vector<std::string>>(); }
  std::vector<std::string> names;
  for (Index c = 0; c < ckpt.model.config.num_classes; ++c) { names.push_back(std::to_string(c)); }
  return names;
}

struct EvalArgs
{
  std::string checkpoint;
  std::string manifest;
  std::string out;
  PolicyFlags policy;
};

int cmd_eval(EvalArgs const &a, Settings const &s)
{
  Checkpoint<float> const ckpt = load_checkpoint<float>(a.checkpoint);
  DatasetManifest const manifest = read_manifest(a.manifest);
  AugmentPolicy const policy = checkpoint_policy(ckpt, a.policy);
  echo_common(s);
  echo_policy(policy);
  if (manifest.num_classes() != ckpt.model.config.num_classes) {
    throw DatasetError(fmt::format("checkpoint predicts {} classes but the manifest has {}", ckpt.model.config.num_classes,
                                   manifest.num_classes()));
  }
  Evaluation<float> const ev = evaluate(ckpt.model, manifest, policy);
  std::vector<EpochRecord> records;
  if (ckpt.metadata.contains("records")) { records = records_from_json(ckpt.metadata["records"]); }
  export_results(ev.report, ev.matrix, records, a.out);
  fmt::print(stderr, "{}", format_report_table(ev.report));
  fmt::print("accuracy {:.4f}\n", ev.report.accuracy);
  return 0;
}

struct PredictArgs
{
  std::string checkpoint;
  std::string image;
  PolicyFlags policy;
};

int cmd_predict(PredictArgs const &a, Settings const &)
{
  Checkpoint<float> const ckpt = load_checkpoint<float>(a.checkpoint);
  AugmentPolicy const policy = checkpoint_policy(ckpt, a.policy);
  std::vector<std::string> const names = checkpoint_classes(ckpt);
  if (Index(names.size()) != ckpt.model.config.num_classes) {
    throw DatasetError("checkpoint class names do not match its class count");
  }
  ImageTensor const image = read_ppm(a.image);
  Vector<float> const probs = predict(ckpt.model, image, policy);
  std::vector<Index> order(std::size_t(probs.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return probs(i) > probs(j); });
  fmt::print("top1 {} {:.6f}\n", names[std::size_t(order.front())], probs(order.front()));
  for (Index const c : order) { fmt::print("{} {:.6f}\n", names[std::size_t(c)], probs(c)); }
  return 0;
}

struct GradcheckArgs
{
  std::int64_t samples_per_tensor = 3;
  bool corrupt = false;
  ModelFlags model;
};

int cmd_gradcheck(GradcheckArgs const &a, Settings const &s)
{
  GradCheckOptions opts;
  opts.seed = s.seed;
  opts.samples_per_tensor = a.samples_per_tensor;
  opts.corrupt_gradient = a.corrupt;
  AugmentPolicy policy;
  opts.model = resolve_or_usage([&] { return resolve_model(a.model, policy, false, a.model.num_classes.value_or(12)); });
  echo_common(s);
  echo_json("model.", json(opts.model));
  echo("step", fmt::format("{}", opts.step));

  auto const t0 = std::chrono::steady_clock::now();
  bool ok = true;
  for (auto const &r : run_gradcheck(opts)) {
    ok = ok && r.passed();
    fmt::print("{:<24} max_rel_error {:.3e}  tolerance {:.0e}  entries {:>4}  {}  worst {}\n", r.name, r.max_relative_error,
               r.tolerance, r.checked, r.passed() ? "PASS" : "FAIL", r.worst_entry);
  }
  double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fmt::print(stderr, "gradcheck finished in {:.1f}s\n", secs);
  return ok ? 0 : kExitFailure;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Global-context vision transformer: data preparation, training, evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Settings settings;
  app.add_option("--seed", settings.seed, "master seed for every random stream")->capture_default_str();
  app.add_flag("--deterministic", settings.deterministic, "single worker, bit-reproducible run");
  app.add_flag("-q,--quiet", settings.quiet, "suppress per-epoch progress");

  SynthArgs synth;
  auto *synth_cmd = app.add_subcommand("synth", "write a synthetic folder-per-class dataset");
  synth_cmd->add_option("--root", synth.root, "output dataset root")->required();
  synth_cmd->add_option("--classes", synth.classes, "number of classes")->capture_default_str();
  synth_cmd->add_option("--per-class", synth.per_class, "images per class")->capture_default_str();
  synth_cmd->add_option("--size", synth.size, "image side")->capture_default_str();

  PrepareArgs prepare;
  auto *prepare_cmd = app.add_subcommand("prepare", "scan a dataset and write train/val manifests");
  prepare_cmd->add_option("--data-root", prepare.data_root, "folder-per-class dataset root")->required()->check(CLI::ExistingDirectory);
  prepare_cmd->add_option("--out", prepare.out, "output directory for manifests")->required();
  prepare_cmd->add_option("--train-fraction", prepare.train_fraction, "training share per class")->capture_default_str();
  prepare_cmd->add_flag("--stratified,!--no-stratified", prepare.stratified, "split each class separately");

  TrainArgs train;
  auto *train_cmd = app.add_subcommand("train", "fit a model and write the best checkpoint");
  train_cmd->add_option("--train", train.train_manifest, "training manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--val", train.val_manifest, "validation manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "output directory")->required();
  train_cmd->add_option("--batch-size", train.batch_size, "mini-batch size (default 32)");
  train_cmd->add_option("--max-epochs", train.max_epochs, "epoch budget (default 100)");
  train_cmd->add_option("--lr-max", train.lr_max, "peak learning rate (default 1e-4)");
  train_cmd->add_option("--lr-min", train.lr_min, "final learning rate (default 0)");
  train_cmd->add_option("--weight-decay", train.weight_decay, "decoupled weight decay (default 1e-4)");
  train_cmd->add_option("--label-smoothing", train.label_smoothing, "label smoothing (default 0.1)");
  train_cmd->add_option("--patience", train.patience, "early-stopping patience (default 5)");
  train_cmd->add_option("--schedule", train.schedule, "learning-rate schedule")->check(CLI::IsMember({"cosine", "step"}));
  train_cmd->add_option("--milestones", train.milestones, "step schedule milestones in epochs");
  train_cmd->add_option("--gamma", train.gamma, "step schedule decay factor");
  train.policy.add(train_cmd);
  train.model.add(train_cmd);

  EvalArgs eval;
  auto *eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint and export report files");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--manifest", eval.manifest, "manifest to evaluate")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval.out, "output directory for reports")->required();
  eval.policy.add(eval_cmd);

  PredictArgs pred;
  auto *predict_cmd = app.add_subcommand("predict", "classify one image");
  predict_cmd->add_option("--checkpoint", pred.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--image", pred.image, "PPM image")->required()->check(CLI::ExistingFile);
  pred.policy.add(predict_cmd);

  GradcheckArgs grad;
  auto *grad_cmd = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  grad_cmd->add_option("--samples-per-tensor", grad.samples_per_tensor, "entries per tensor in the end-to-end check")
      ->capture_default_str();
  grad_cmd->add_flag("--corrupt-gradient", grad.corrupt, "test hook: perturb analytic gradients")->group("");
  grad.model.add(grad_cmd);

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (settings.deterministic) { Eigen::setNbThreads(1); }
  try {
    if (*synth_cmd) { return cmd_synth(synth, settings); }
    if (*prepare_cmd) { return cmd_prepare(prepare, settings); }
    if (*train_cmd) { return cmd_train(train, settings); }
    if (*eval_cmd) { return cmd_eval(eval, settings); }
    if (*predict_cmd) { return cmd_predict(pred, settings); }
    if (*grad_cmd) { return cmd_gradcheck(grad, settings); }
  } catch (ConfigError const &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (std::exception const &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
