#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "mgmd/audio/wav.hpp"
#include "mgmd/core/error.hpp"
#include "mgmd/core/random.hpp"
#include "mgmd/data/manifest.hpp"
#include "mgmd/data/splits.hpp"
#include "support/oracles.hpp"

using namespace mgmd;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "mgmd_manifest_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void touch_wav(const fs::path& path) {
  std::vector<float> samples(64, 0.1f);
  write_wav(path, samples, 8000);
}

DatasetManifest synthetic_manifest(size_t n_human, size_t n_machine) {
  DatasetManifest manifest;
  for (size_t i = 0; i < n_human; ++i) {
    manifest.rows.push_back({"h" + std::to_string(i), "h.wav", Label::human, "", std::nullopt});
  }
  for (size_t i = 0; i < n_machine; ++i) {
    manifest.rows.push_back({"m" + std::to_string(i), "m.wav", Label::machine, "", std::nullopt});
  }
  return manifest;
}

std::vector<LabelingRule> default_rules() {
  return {{"human/*", Label::human, ""}, {"machine/*", Label::machine, ""}};
}

}  // namespace

TEST_CASE("manifest walks the tree and counts labels") {
  fs::path root = fresh_dir("basic");
  for (int i = 0; i < 3; ++i) touch_wav(root / "human" / ("a" + std::to_string(i) + ".wav"));
  for (int i = 0; i < 5; ++i) touch_wav(root / "machine" / ("b" + std::to_string(i) + ".wav"));

  DatasetManifest manifest = build_manifest(root, default_rules());
  CHECK(manifest.size() == 8);
  auto counts = manifest.label_counts();
  CHECK(counts["human"] == 3);
  CHECK(counts["machine"] == 5);

  std::set<std::string> ids;
  for (const auto& row : manifest.rows) ids.insert(row.id);
  CHECK(ids.size() == 8);  // unique ids
}

TEST_CASE("lyrics sidecars pair by stem") {
  fs::path root = fresh_dir("lyrics");
  touch_wav(root / "human" / "song.wav");
  std::ofstream(root / "human" / "song.txt") << "la la la";
  touch_wav(root / "human" / "nosong.wav");

  DatasetManifest manifest = build_manifest(root, default_rules());
  int with = 0, without = 0;
  for (const auto& row : manifest.rows) {
    (row.lyrics_path.has_value() ? with : without)++;
  }
  CHECK(with == 1);
  CHECK(without == 1);
}

TEST_CASE("empty directory and ambiguous rules raise") {
  fs::path root = fresh_dir("empty");
  fs::create_directories(root / "human");
  CHECK_THROWS_AS(build_manifest(root, default_rules()), Error);

  fs::path ambiguous = fresh_dir("ambiguous");
  touch_wav(ambiguous / "human" / "x.wav");
  std::vector<LabelingRule> rules = {{"human/*", Label::human, ""}, {"*x.wav", Label::machine, ""}};
  try {
    build_manifest(ambiguous, rules);
    FAIL("expected AmbiguousLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ambiguous_label);
  }
}

TEST_CASE("manifest jsonl round trip") {
  fs::path root = fresh_dir("roundtrip");
  touch_wav(root / "human" / "a.wav");
  touch_wav(root / "machine" / "b.wav");
  DatasetManifest manifest = build_manifest(root, default_rules());

  fs::path file = root / "manifest.jsonl";
  write_manifest_jsonl(manifest, file);
  DatasetManifest loaded = read_manifest_jsonl(file);
  REQUIRE(loaded.size() == manifest.size());
  for (size_t i = 0; i < manifest.size(); ++i) {
    CHECK(loaded.rows[i].id == manifest.rows[i].id);
    CHECK(loaded.rows[i].label == manifest.rows[i].label);
  }
}

TEST_CASE("glob matching") {
  CHECK(glob_match("human/*", "human/x.wav"));
  CHECK(glob_match("*.wav", "deep/nested/file.wav"));
  CHECK(glob_match("a?c", "abc"));
  CHECK_FALSE(glob_match("human/*", "machine/x.wav"));
  CHECK_FALSE(glob_match("a?c", "ac"));
}

TEST_CASE("1000 rows split 640/160/200") {
  DatasetManifest manifest = synthetic_manifest(500, 500);
  SplitAssignment split = assign_splits(manifest, 7);
  CHECK(split.train_ids.size() == 640);
  CHECK(split.val_ids.size() == 160);
  CHECK(split.test_ids.size() == 200);
}

TEST_CASE("10 rows split 6/2/2 under the two-stage floor rule") {
  SplitSizes sizes = split_sizes(10);
  CHECK(sizes.train == 6);
  CHECK(sizes.val == 2);
  CHECK(sizes.test == 2);

  DatasetManifest manifest = synthetic_manifest(10, 0);
  SplitAssignment split = assign_splits(manifest, 3);
  CHECK(split.train_ids.size() == 6);
  CHECK(split.val_ids.size() == 2);
  CHECK(split.test_ids.size() == 2);
}

TEST_CASE("split determinism: identical files for identical inputs") {
  DatasetManifest manifest = synthetic_manifest(37, 63);
  SplitAssignment a = assign_splits(manifest, 42);
  SplitAssignment b = assign_splits(manifest, 42);
  CHECK(a.train_ids == b.train_ids);
  CHECK(a.val_ids == b.val_ids);
  CHECK(a.test_ids == b.test_ids);

  fs::path dir = fresh_dir("splitfiles");
  write_split_json(a, dir / "a.json");
  write_split_json(b, dir / "b.json");
  std::ifstream fa(dir / "a.json"), fb(dir / "b.json");
  std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);

  SplitAssignment c = assign_splits(manifest, 43);
  CHECK(a.train_ids != c.train_ids);
}

TEST_CASE("splits are disjoint, covering, and sized by the per-class rule") {
  Rng rng(2024);
  for (int round = 0; round < 40; ++round) {
    size_t n_human = 2 + rng.next_below(200);
    size_t n_machine = 2 + rng.next_below(200);
    DatasetManifest manifest = synthetic_manifest(n_human, n_machine);
    SplitAssignment split = assign_splits(manifest, static_cast<int64_t>(round));

    std::set<std::string> all;
    for (const auto& id : split.train_ids) all.insert(id);
    for (const auto& id : split.val_ids) all.insert(id);
    for (const auto& id : split.test_ids) all.insert(id);
    CHECK(all.size() == split.train_ids.size() + split.val_ids.size() + split.test_ids.size());
    CHECK(all.size() == manifest.size());

    auto h = testing::split_oracle_per_class(n_human);
    auto m = testing::split_oracle_per_class(n_machine);
    CHECK(split.train_ids.size() == h.train + m.train);
    CHECK(split.val_ids.size() == h.val + m.val);
    CHECK(split.test_ids.size() == h.test + m.test);

    // Stratification: class ratios carry into each split.
    size_t train_human = 0;
    for (const auto& id : split.train_ids) train_human += id[0] == 'h';
    CHECK(train_human == h.train);
  }
}

TEST_CASE("too few samples raises") {
  DatasetManifest tiny = synthetic_manifest(2, 0);
  CHECK_THROWS_AS(assign_splits(tiny, 1), Error);

  // 3 rows but classes {2,1}: the per-class floors empty the train split.
  DatasetManifest degenerate = synthetic_manifest(2, 1);
  try {
    assign_splits(degenerate, 1);
    FAIL("expected TooFewSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::too_few_samples);
  }

  // Single-class 3 rows works (1/1/1).
  DatasetManifest three = synthetic_manifest(3, 0);
  SplitAssignment split = assign_splits(three, 1);
  CHECK(split.train_ids.size() == 1);
  CHECK(split.val_ids.size() == 1);
  CHECK(split.test_ids.size() == 1);
}
