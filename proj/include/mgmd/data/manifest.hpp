#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mgmd {

enum class Label { human, machine };

const char* label_name(Label label);
Label parse_label(const std::string& name);

/// Class index used by every classifier head: human is the positive
/// class (index 1), machine the negative (index 0).
int label_class_index(Label label);
constexpr int kClassMachine = 0;
constexpr int kClassHuman = 1;

struct ManifestRow {
  std::string id;
  std::string path;
  Label label = Label::human;
  std::string subset_tag;
  std::optional<std::string> lyrics_path;
};

struct DatasetManifest {
  std::vector<ManifestRow> rows;

  bool empty() const { return rows.empty(); }
  size_t size() const { return rows.size(); }
  const ManifestRow& row_by_id(const std::string& id) const;
  std::map<std::string, size_t> label_counts() const;
  std::vector<std::string> ids() const;

  /// Rows whose subset_tag matches (empty tag matches everything).
  DatasetManifest filter_subset(const std::string& subset_tag) const;
};

/// One labeling rule: files whose root-relative path matches `pattern`
/// ('*' and '?' wildcards) get `label` and optionally a subset tag.
struct LabelingRule {
  std::string pattern;
  Label label = Label::human;
  std::string subset_tag;
};

/// Walks `root` for .wav files, labels them by the rules, and pairs each
/// file with a `<stem>.txt` lyrics sidecar when present. A file matching
/// more than one rule is an AmbiguousLabel error; no matches at all is
/// EmptyDataset.
DatasetManifest build_manifest(const std::filesystem::path& root,
                               const std::vector<LabelingRule>& rules);

/// JSON Lines persistence: one row object per line.
void write_manifest_jsonl(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest_jsonl(const std::filesystem::path& path);

bool glob_match(const std::string& pattern, const std::string& text);

}  // namespace mgmd
