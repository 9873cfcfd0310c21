#include "gcvit/dataset.hpp"

#include "gcvit/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace gcvit {

std::vector<std::int64_t> DatasetManifest::counts() const
{
  std::vector<std::int64_t> c(class_names.size(), 0);
  for (auto const &e : entries) {
    if (e.class_id >= 0 && e.class_id < Index(c.size())) { ++c[std::size_t(e.class_id)]; }
  }
  return c;
}

void DatasetManifest::validate() const
{
  std::set<fs::path> seen;
  for (auto const &e : entries) {
    if (e.class_id < 0 || e.class_id >= num_classes()) {
      throw DatasetError(fmt::format("{}: class id {} outside vocabulary of {}", e.path.string(), e.class_id, num_classes()));
    }
    if (!seen.insert(e.path).second) { throw DatasetError(fmt::format("duplicate manifest path {}", e.path.string())); }
  }
}

namespace {

bool hidden(fs::path const &p)
{
  auto const name = p.filename().string();
  return name.empty() || name.front() == '.';
}

} // namespace

DatasetManifest load_dataset(fs::path const &root)
{
  std::error_code ec;
  if (!fs::is_directory(root, ec)) { throw DatasetError(fmt::format("{}: dataset root is not a directory", root.string())); }
  std::vector<fs::path> class_dirs;
  for (auto const &entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && !hidden(entry.path())) { class_dirs.push_back(entry.path()); }
  }
  if (class_dirs.empty()) { throw DatasetError(fmt::format("{}: no classes found", root.string())); }
  std::sort(class_dirs.begin(), class_dirs.end());

  DatasetManifest m;
  std::vector<std::string> problems;
  for (auto const &dir : class_dirs) {
    Index const id = m.num_classes();
    m.class_names.push_back(dir.filename().string());
    std::vector<fs::path> files;
    for (auto const &entry : fs::directory_iterator(dir)) {
      if (!hidden(entry.path()) && !entry.is_directory()) { files.push_back(entry.path()); }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      problems.push_back(fmt::format("class '{}' has no images ({})", m.class_names.back(), dir.string()));
      continue;
    }
    for (auto const &f : files) {
      try {
        read_ppm(f);
      } catch (IoError const &e) {
        problems.push_back(fmt::format("unreadable image: {}", e.what()));
        continue;
      }
      m.entries.push_back({f, id, {}});
    }
  }
  if (!problems.empty()) {
    std::string report = fmt::format("{}: {} problem(s) in dataset", root.string(), problems.size());
    for (auto const &p : problems) { report += "\n  " + p; }
    throw DatasetError(report);
  }
  return m;
}

void SplitSpec::validate() const
{
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) { throw ConfigError("train_fraction must lie in (0, 1)"); }
}

std::int64_t split_train_count(std::int64_t n, double train_fraction)
{
  return static_cast<std::int64_t>(std::floor(train_fraction * double(n) + 0.5));
}

std::pair<DatasetManifest, DatasetManifest> stratified_split(DatasetManifest const &manifest, SplitSpec const &spec)
{
  spec.validate();
  manifest.validate();
  std::vector<bool> to_train(manifest.entries.size(), false);
  Rng rng(derive_seed(spec.seed, "split"));
  if (spec.stratified) {
    std::vector<std::vector<std::size_t>> by_class(manifest.class_names.size());
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      by_class[std::size_t(manifest.entries[i].class_id)].push_back(i);
    }
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      if (by_class[c].empty()) {
        throw DatasetError(fmt::format("stratified_split: class '{}' has no samples", manifest.class_names[c]));
      }
      rng.shuffle(by_class[c]);
      auto const k = std::size_t(split_train_count(std::int64_t(by_class[c].size()), spec.train_fraction));
      for (std::size_t j = 0; j < k; ++j) { to_train[by_class[c][j]] = true; }
    }
  } else {
    std::vector<std::size_t> order(manifest.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) { order[i] = i; }
    rng.shuffle(order);
    auto const k = std::size_t(split_train_count(std::int64_t(order.size()), spec.train_fraction));
    for (std::size_t j = 0; j < k; ++j) { to_train[order[j]] = true; }
  }

  DatasetManifest train, val;
  train.class_names = val.class_names = manifest.class_names;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    ManifestEntry e = manifest.entries[i];
    e.split = to_train[i] ? "train" : "val";
    (to_train[i] ? train : val).entries.push_back(std::move(e));
  }
  return {std::move(train), std::move(val)};
}

DatasetManifest merge(DatasetManifest const &a, DatasetManifest const &b)
{
  if (a.class_names != b.class_names) { throw DatasetError("merge: manifests have different vocabularies"); }
  DatasetManifest m = a;
  m.entries.insert(m.entries.end(), b.entries.begin(), b.entries.end());
  return m;
}

DatasetManifest select_split(DatasetManifest const &manifest, std::string const &split)
{
  DatasetManifest m;
  m.class_names = manifest.class_names;
  for (auto const &e : manifest.entries) {
    if (e.split == split) { m.entries.push_back(e); }
  }
  return m;
}

namespace {

std::string csv_field(std::string const &s)
{
  if (s.find_first_of(",\"\n\r") == std::string::npos) { return s; }
  std::string q = "\"";
  for (char const c : s) {
    if (c == '"') { q += '"'; }
    q += c;
  }
  return q + '"';
}

std::vector<std::string> csv_split(std::string const &line)
{
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char const c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

constexpr char const *kManifestHeader = "path,class_id,class_name,split";

} // namespace

void write_manifest(DatasetManifest const &manifest, fs::path const &path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) { throw IoError(fmt::format("{}: cannot open for writing", path.string())); }
  out << kManifestHeader << '\n';
  for (auto const &e : manifest.entries) {
    out << csv_field(e.path.generic_string()) << ',' << e.class_id << ','
        << csv_field(manifest.class_names.at(std::size_t(e.class_id))) << ',' << csv_field(e.split) << '\n';
  }
  if (!out) { throw IoError(fmt::format("{}: write failed", path.string())); }
}

DatasetManifest read_manifest(fs::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError(fmt::format("{}: cannot open manifest", path.string())); }
  std::string line;
  if (!std::getline(in, line) || csv_split(line) != csv_split(kManifestHeader)) {
    throw DatasetError(fmt::format("{}: expected header '{}'", path.string(), kManifestHeader));
  }
  DatasetManifest m;
  std::map<Index, std::string> names;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") { continue; }
    auto const f = csv_split(line);
    if (f.size() != 4) { throw DatasetError(fmt::format("{}:{}: expected 4 fields, got {}", path.string(), lineno, f.size())); }
    Index id = 0;
    try {
      std::size_t used = 0;
      id = std::stoll(f[1], &used);
      if (used != f[1].size() || id < 0) { throw std::invalid_argument(f[1]); }
    } catch (std::exception const &) {
      throw DatasetError(fmt::format("{}:{}: bad class id '{}'", path.string(), lineno, f[1]));
    }
    auto const [it, inserted] = names.emplace(id, f[2]);
    if (!inserted && it->second != f[2]) {
      throw DatasetError(fmt::format("{}:{}: class id {} named both '{}' and '{}'", path.string(), lineno, id, it->second, f[2]));
    }
    m.entries.push_back({fs::path(f[0]), id, f[3]});
  }
  if (!names.empty()) {
    m.class_names.resize(std::size_t(names.rbegin()->first + 1));
    for (auto const &[id, name] : names) { m.class_names[std::size_t(id)] = name; }
  }
  m.validate();
  return m;
}

std::vector<LabeledImage> load_images(DatasetManifest const &manifest)
{
  std::vector<LabeledImage> out;
  out.reserve(manifest.entries.size());
  for (auto const &e : manifest.entries) { out.push_back({read_ppm(e.path), e.class_id, e.path}); }
  return out;
}

} // namespace gcvit
