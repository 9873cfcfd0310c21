#include "gcvit/dataset.hpp"
#include "gcvit/synth.hpp"

#include "test_util.hpp"

#include <fmt/format.h>
#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

using namespace gcvit;
using gcvit::test::ScratchDir;
namespace fs = std::filesystem;

namespace {

// Per-breed train+val counts: Oxford-IIIT cat breed totals minus the test-set supports.
std::vector<std::int64_t> const kPaperTrainval{100, 100, 100, 96, 100, 93, 100, 100, 100, 100, 99, 100};

DatasetManifest in_memory_manifest(std::vector<std::int64_t> const &counts)
{
  DatasetManifest m;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    m.class_names.push_back(fmt::format("class_{}", c));
    for (std::int64_t i = 0; i < counts[c]; ++i) { m.entries.push_back({fmt::format("c{}/img_{}.ppm", c, i), Index(c), {}}); }
  }
  return m;
}

void write_tiny_ppm(fs::path const &path)
{
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << "P6\n1 1\n255\n";
  out.put(char(10)).put(char(20)).put(char(30));
}

} // namespace

TEST(LoadDataset, CountsAndSortedClasses)
{
  ScratchDir dir("load");
  for (char const *cls : {"b", "a"}) {
    for (int i = 4; i >= 0; --i) { write_tiny_ppm(dir / fmt::format("{}/{}.ppm", cls, i)); }
  }
  DatasetManifest const m = load_dataset(dir.path());
  EXPECT_EQ(m.class_names, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(m.entries.size(), 10u);
  EXPECT_EQ(m.entries.front().class_id, 0);
  EXPECT_EQ(m.entries.back().class_id, 1);
  EXPECT_EQ(m.entries.front().path.filename(), "0.ppm");
  EXPECT_EQ(m.counts(), (std::vector<std::int64_t>{5, 5}));
  EXPECT_EQ(load_dataset(dir.path()), m);
}

TEST(LoadDataset, PaperSizedLayout)
{
  ScratchDir dir("load_paper");
  std::vector<std::int64_t> const totals{198, 200, 200, 184, 200, 190, 200, 200, 200, 200, 199, 200};
  for (std::size_t c = 0; c < totals.size(); ++c) {
    for (std::int64_t i = 0; i < totals[c]; ++i) { write_tiny_ppm(dir / fmt::format("breed_{:02d}/{:04d}.ppm", c, i)); }
  }
  DatasetManifest const m = load_dataset(dir.path());
  EXPECT_EQ(m.num_classes(), 12);
  EXPECT_EQ(m.entries.size(), 2371u);
}

TEST(LoadDataset, Errors)
{
  ScratchDir dir("load_err");
  try {
    load_dataset(dir.path());
    FAIL();
  } catch (DatasetError const &e) {
    EXPECT_NE(std::string(e.what()).find("no classes found"), std::string::npos);
  }
  fs::create_directories(dir / "empty");
  write_tiny_ppm(dir / "full/a.ppm");
  {
    std::ofstream out(dir / "full/broken.ppm");
    out << "garbage";
  }
  try {
    load_dataset(dir.path());
    FAIL();
  } catch (DatasetError const &e) {
    std::string const msg = e.what();
    EXPECT_NE(msg.find("empty"), std::string::npos);
    EXPECT_NE(msg.find("broken.ppm"), std::string::npos);
  }
  EXPECT_THROW(load_dataset(dir / "nope"), DatasetError);
}

TEST(Split, TrainCountRounding)
{
  EXPECT_EQ(split_train_count(100, 0.8), 80);
  EXPECT_EQ(split_train_count(96, 0.8), 77);
  EXPECT_EQ(split_train_count(93, 0.8), 74);
  EXPECT_EQ(split_train_count(99, 0.8), 79);
  EXPECT_EQ(split_train_count(10, 0.8), 8);
  EXPECT_EQ(split_train_count(1, 0.8), 1);
}

TEST(Split, PaperDistributionTotals)
{
  DatasetManifest const m = in_memory_manifest(kPaperTrainval);
  ASSERT_EQ(m.entries.size(), 1188u);
  auto const [train, val] = stratified_split(m, {0.8, 42, true});
  EXPECT_EQ(train.entries.size(), 950u);
  EXPECT_EQ(val.entries.size(), 238u);
  auto const tc = train.counts();
  for (std::size_t c = 0; c < kPaperTrainval.size(); ++c) {
    EXPECT_LE(std::abs(double(tc[c]) - 0.8 * double(kPaperTrainval[c])), 1.0);
  }
}

TEST(Split, PartitionProperties)
{
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::int64_t> counts;
    for (Index c = 0, n = 2 + Index(rng.below(10)); c < n; ++c) { counts.push_back(1 + std::int64_t(rng.below(40))); }
    DatasetManifest const m = in_memory_manifest(counts);
    double const f = 0.1 + 0.8 * rng.uniform();
    auto const [train, val] = stratified_split(m, {f, std::uint64_t(trial), true});
    std::set<fs::path> a, b;
    for (auto const &e : train.entries) {
      a.insert(e.path);
      EXPECT_EQ(e.split, "train");
    }
    for (auto const &e : val.entries) {
      b.insert(e.path);
      EXPECT_EQ(e.split, "val");
    }
    EXPECT_EQ(a.size() + b.size(), m.entries.size());
    for (auto const &p : a) { EXPECT_FALSE(b.count(p)); }
    auto const tc = train.counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
      EXPECT_EQ(tc[c], split_train_count(counts[c], f));
      EXPECT_LE(std::abs(double(tc[c]) - f * double(counts[c])), 1.0);
    }
    EXPECT_EQ(train.class_names, m.class_names);
  }
}

TEST(Split, SingleClassAndSeeds)
{
  DatasetManifest const m = in_memory_manifest({100});
  auto const [t1, v1] = stratified_split(m, {0.8, 1, true});
  auto const [t2, v2] = stratified_split(m, {0.8, 1, true});
  auto const [t3, v3] = stratified_split(m, {0.8, 2, true});
  EXPECT_EQ(t1.entries.size(), 80u);
  EXPECT_EQ(v1.entries.size(), 20u);
  EXPECT_EQ(t1, t2);
  EXPECT_EQ(v1, v2);
  EXPECT_NE(t1, t3);
  EXPECT_EQ(t3.entries.size(), 80u);
}

TEST(Split, Errors)
{
  DatasetManifest m = in_memory_manifest({5, 5});
  m.class_names.push_back("ghost");
  EXPECT_THROW(stratified_split(m, {0.8, 1, true}), DatasetError);
  EXPECT_THROW(stratified_split(in_memory_manifest({5}), {1.0, 1, true}), ConfigError);
}

TEST(Manifest, RoundTripWithQuoting)
{
  ScratchDir dir("manifest");
  DatasetManifest m = in_memory_manifest({2, 3});
  m.class_names[1] = "Maine, \"Coon\"";
  m.entries[0].split = "train";
  write_manifest(m, dir / "m.csv");
  DatasetManifest const back = read_manifest(dir / "m.csv");
  EXPECT_EQ(back, m);
  EXPECT_EQ(gcvit::test::slurp(dir / "m.csv").substr(0, 31), "path,class_id,class_name,split\n");
}

TEST(Manifest, ValidateCatchesProblems)
{
  DatasetManifest m = in_memory_manifest({2});
  m.entries.push_back(m.entries.front());
  EXPECT_THROW(m.validate(), DatasetError);
  m = in_memory_manifest({2});
  m.entries.front().class_id = 3;
  EXPECT_THROW(m.validate(), DatasetError);
}

TEST(Synth, DatasetLayoutAndDeterminism)
{
  ScratchDir a("synth_a"), b("synth_b");
  DatasetManifest const ma = synth_dataset(a.path(), 12, 8, 16, 3);
  synth_dataset(b.path(), 12, 8, 16, 3);
  EXPECT_EQ(ma.entries.size(), 96u);
  for (auto n : ma.counts()) { EXPECT_EQ(n, 8); }
  DatasetManifest const loaded = load_dataset(a.path());
  EXPECT_EQ(loaded, ma);
  for (auto const &e : ma.entries) {
    fs::path const rel = fs::relative(e.path, a.path());
    EXPECT_EQ(gcvit::test::slurp(e.path), gcvit::test::slurp(b.path() / rel)) << rel;
  }
}

TEST(Synth, PaletteSeparation)
{
  auto const p12 = synth_palette(12);
  EXPECT_NEAR(p12[0][0], 0.9, 1e-12);
  EXPECT_NEAR(p12[0][1], 0.18, 1e-12);
  EXPECT_NEAR(p12[1][1], 0.54, 1e-12);
  EXPECT_NEAR(p12[4][0], 0.18, 1e-12);
  EXPECT_NEAR(p12[4][1], 0.9, 1e-12);
  for (Index n = 2; n <= kMaxSynthClasses; ++n) {
    auto const p = synth_palette(n);
    double min_sep = 1.0;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < i; ++j) {
        double sep = 0.0;
        for (int c = 0; c < 3; ++c) { sep = std::max(sep, std::abs(p[std::size_t(i)][c] - p[std::size_t(j)][c])); }
        min_sep = std::min(min_sep, sep);
      }
    }
    EXPECT_GE(min_sep, 0.2) << n << " classes";
    if (n == 12) { EXPECT_NEAR(min_sep, 0.36, 1e-12); }
  }
  EXPECT_THROW(synth_palette(1), ConfigError);
  EXPECT_THROW(synth_palette(kMaxSynthClasses + 1), ConfigError);
}

TEST(Synth, ImageMeansStaySeparated)
{
  for (Index n : {12, 40}) {
    std::vector<Vector<double>> means;
    for (Index c = 0; c < n; ++c) { means.push_back(synth_image(c, n, 32, 7).values.colwise().mean().transpose()); }
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < i; ++j) {
        EXPECT_GE((means[std::size_t(i)] - means[std::size_t(j)]).cwiseAbs().maxCoeff(), 0.2) << i << " vs " << j;
      }
    }
  }
}
