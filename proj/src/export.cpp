#include "gcvit/export.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace gcvit {

namespace {

std::string quote(std::string const &s)
{
  if (s.find_first_of(",\"\n") == std::string::npos) { return s; }
  std::string q = "\"";
  for (char const c : s) {
    if (c == '"') { q += '"'; }
    q += c;
  }
  return q + '"';
}

std::vector<std::string> split_csv(std::string const &line)
{
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char const c = line[i];
    if (quoted && c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
      fields.back() += '"';
      ++i;
    } else if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

std::string undefined_flags(ClassMetrics const &m)
{
  std::vector<std::string> f;
  if (m.precision_undefined) { f.emplace_back("precision"); }
  if (m.recall_undefined) { f.emplace_back("recall"); }
  if (m.f1_undefined) { f.emplace_back("f1"); }
  return fmt::format("{}", fmt::join(f, ";"));
}

} // namespace

std::string format_report_csv(ClassificationReport const &r)
{
  std::string s = "class,precision,recall,f1_score,support\n";
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    auto const &m = r.classes[c];
    s += fmt::format("{},{:.2f},{:.2f},{:.2f},{}\n", quote(r.class_names[c]), m.precision, m.recall, m.f1, m.support);
  }
  s += fmt::format("Accuracy,,,{:.2f},{}\n", r.accuracy, r.total);
  s += fmt::format("Macro Avg,{:.2f},{:.2f},{:.2f},{}\n", r.macro.precision, r.macro.recall, r.macro.f1, r.macro.support);
  s += fmt::format("Weighted Avg,{:.2f},{:.2f},{:.2f},{}\n", r.weighted.precision, r.weighted.recall, r.weighted.f1,
                   r.weighted.support);
  return s;
}

std::string format_report_full_csv(ClassificationReport const &r)
{
  std::string s = "class,precision,recall,f1_score,support,undefined\n";
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    auto const &m = r.classes[c];
    s += fmt::format("{},{},{},{},{},{}\n", quote(r.class_names[c]), m.precision, m.recall, m.f1, m.support, undefined_flags(m));
  }
  s += fmt::format("Accuracy,,,{},{},\n", r.accuracy, r.total);
  s += fmt::format("Macro Avg,{},{},{},{},\n", r.macro.precision, r.macro.recall, r.macro.f1, r.macro.support);
  s += fmt::format("Weighted Avg,{},{},{},{},\n", r.weighted.precision, r.weighted.recall, r.weighted.f1, r.weighted.support);
  return s;
}

std::string format_confusion_csv(ConfusionMatrix const &m)
{
  std::string s = "true\\predicted";
  for (auto const &n : m.class_names) { s += "," + quote(n); }
  s += '\n';
  for (Index i = 0; i < m.num_classes(); ++i) {
    s += quote(m.class_names[std::size_t(i)]);
    for (Index j = 0; j < m.num_classes(); ++j) { s += fmt::format(",{}", m.counts(i, j)); }
    s += '\n';
  }
  return s;
}

ConfusionMatrix parse_confusion_csv(std::string const &text)
{
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) { throw DatasetError("confusion csv: empty input"); }
  auto header = split_csv(line);
  if (header.empty() || header.front() != "true\\predicted") { throw DatasetError("confusion csv: bad header"); }
  ConfusionMatrix m;
  m.class_names.assign(header.begin() + 1, header.end());
  auto const n = Index(m.class_names.size());
  m.counts = CountMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    if (!std::getline(in, line)) { throw DatasetError("confusion csv: missing rows"); }
    auto const f = split_csv(line);
    if (Index(f.size()) != n + 1 || f[0] != m.class_names[std::size_t(i)]) {
      throw DatasetError(fmt::format("confusion csv: malformed row {}", i + 1));
    }
    for (Index j = 0; j < n; ++j) {
      try {
        m.counts(i, j) = std::stoll(f[std::size_t(j + 1)]);
      } catch (std::exception const &) {
        throw DatasetError(fmt::format("confusion csv: bad count '{}'", f[std::size_t(j + 1)]));
      }
    }
  }
  return m;
}

ConfusionMatrix read_confusion_csv(fs::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError(fmt::format("{}: cannot open", path.string())); }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_confusion_csv(ss.str());
}

std::string format_per_class_csv(ConfusionMatrix const &m)
{
  PerClassAccuracy const acc = per_class_accuracy(m);
  std::string s = "class,accuracy,support,undefined\n";
  for (Index c = 0; c < m.num_classes(); ++c) {
    s += fmt::format("{},{},{},{}\n", quote(m.class_names[std::size_t(c)]), acc.accuracy[std::size_t(c)], m.support(c),
                     acc.undefined[std::size_t(c)] ? "accuracy" : "");
  }
  return s;
}

std::string format_curve_line(EpochRecord const &r)
{
  return fmt::format("{},{},{},{},{},{}\n", r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy, r.learning_rate);
}

std::string format_curves_csv(std::vector<EpochRecord> const &records)
{
  std::string s = std::string(kCurvesHeader) + "\n";
  for (auto const &r : records) { s += format_curve_line(r); }
  return s;
}

std::string format_report_table(ClassificationReport const &r)
{
  std::size_t width = 12;
  for (auto const &n : r.class_names) { width = std::max(width, n.size()); }
  std::string s = fmt::format("{:<{}}  {:>9}  {:>6}  {:>8}  {:>7}\n", "Class", width, "Precision", "Recall", "F1-score", "Support");
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    auto const &m = r.classes[c];
    s += fmt::format("{:<{}}  {:>9.2f}  {:>6.2f}  {:>8.2f}  {:>7}\n", r.class_names[c], width, m.precision, m.recall, m.f1, m.support);
  }
  s += fmt::format("{:<{}}  {:>9}  {:>6}  {:>8.2f}  {:>7}\n", "Accuracy", width, "", "", r.accuracy, r.total);
  s += fmt::format("{:<{}}  {:>9.2f}  {:>6.2f}  {:>8.2f}  {:>7}\n", "Macro Avg", width, r.macro.precision, r.macro.recall,
                   r.macro.f1, r.macro.support);
  s += fmt::format("{:<{}}  {:>9.2f}  {:>6.2f}  {:>8.2f}  {:>7}\n", "Weighted Avg", width, r.weighted.precision,
                   r.weighted.recall, r.weighted.f1, r.weighted.support);
  return s;
}

void write_text(fs::path const &path, std::string const &text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) { throw IoError(fmt::format("{}: cannot open for writing", path.string())); }
  out << text;
  if (!out) { throw IoError(fmt::format("{}: write failed", path.string())); }
}

void export_results(ClassificationReport const &report, ConfusionMatrix const &matrix,
                    std::vector<EpochRecord> const &records, fs::path const &out_dir)
{
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) { throw IoError(fmt::format("{}: cannot create directory: {}", out_dir.string(), ec.message())); }
  write_text(out_dir / kReportFile, format_report_csv(report));
  write_text(out_dir / kReportFullFile, format_report_full_csv(report));
  write_text(out_dir / kConfusionFile, format_confusion_csv(matrix));
  write_text(out_dir / kPerClassFile, format_per_class_csv(matrix));
  write_text(out_dir / kCurvesFile, format_curves_csv(records));
}

} // namespace gcvit
