#pragma once

#include "gcvit/image.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gcvit {

struct ManifestEntry
{
  std::filesystem::path path;
  Index class_id = 0;
  std::string split; // "train", "val", or empty before splitting

  bool operator==(ManifestEntry const &) const = default;
};

struct DatasetManifest
{
  std::vector<ManifestEntry> entries;
  std::vector<std::string> class_names;

  Index num_classes() const { return Index(class_names.size()); }
  std::vector<std::int64_t> counts() const;

  // class ids in range, no duplicate paths. Throws DatasetError.
  void validate() const;

  bool operator==(DatasetManifest const &) const = default;
};

// Folder-per-class layout `root/<class_name>/<image files>`. Classes and files are sorted
// lexicographically; hidden entries are ignored. Every file is decoded once, and all problems
// (no classes, empty class directories, unreadable files) are collected into one DatasetError.
DatasetManifest load_dataset(std::filesystem::path const &root);

struct SplitSpec
{
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = true;

  void validate() const;
};

// Number of training samples taken from a class of `n`: floor(fraction * n + 0.5).
std::int64_t split_train_count(std::int64_t n, double train_fraction);

// Partitions the manifest into (train, val). Stratified splits shuffle each class with the
// seeded "split" stream and take split_train_count of it; otherwise the whole list is shuffled.
// Both outputs keep the input order and vocabulary and carry their split label.
std::pair<DatasetManifest, DatasetManifest> stratified_split(DatasetManifest const &manifest, SplitSpec const &spec);

DatasetManifest merge(DatasetManifest const &a, DatasetManifest const &b);

// Entries whose split label equals `split`.
DatasetManifest select_split(DatasetManifest const &manifest, std::string const &split);

// Delimited text with header `path,class_id,class_name,split`; fields containing commas or
// quotes are quoted.
void write_manifest(DatasetManifest const &manifest, std::filesystem::path const &path);

// The vocabulary is rebuilt from the rows (size = largest class id + 1); ids without rows get
// an empty name.
DatasetManifest read_manifest(std::filesystem::path const &path);

struct LabeledImage
{
  ImageTensor image;
  Index label = 0;
  std::filesystem::path path;
};

// Decodes every entry; errors name the offending file.
std::vector<LabeledImage> load_images(DatasetManifest const &manifest);

} // namespace gcvit
