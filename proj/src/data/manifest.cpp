#include "mgmd/data/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mgmd/core/array_io.hpp"
#include "mgmd/core/error.hpp"

namespace mgmd {

namespace fs = std::filesystem;

const char* label_name(Label label) { return label == Label::human ? "human" : "machine"; }

Label parse_label(const std::string& name) {
  if (name == "human") return Label::human;
  if (name == "machine") return Label::machine;
  throw Error(ErrorCode::config_error, "unknown label '" + name + "'");
}

int label_class_index(Label label) { return label == Label::human ? kClassHuman : kClassMachine; }

const ManifestRow& DatasetManifest::row_by_id(const std::string& id) const {
  for (const auto& row : rows) {
    if (row.id == id) return row;
  }
  throw Error(ErrorCode::missing_artifact, "manifest has no row with id '" + id + "'");
}

std::map<std::string, size_t> DatasetManifest::label_counts() const {
  std::map<std::string, size_t> counts;
  for (const auto& row : rows) counts[label_name(row.label)]++;
  return counts;
}

std::vector<std::string> DatasetManifest::ids() const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.id);
  return out;
}

DatasetManifest DatasetManifest::filter_subset(const std::string& subset_tag) const {
  if (subset_tag.empty()) return *this;
  DatasetManifest out;
  for (const auto& row : rows) {
    if (row.subset_tag == subset_tag) out.rows.push_back(row);
  }
  return out;
}

bool glob_match(const std::string& pattern, const std::string& text) {
  // Iterative wildcard match with backtracking on '*'.
  size_t p = 0, t = 0, star = std::string::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

namespace {

std::string sanitize_id(const std::string& rel) {
  std::string id;
  for (char c : rel) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') {
      id.push_back(c);
    } else {
      id.push_back('_');
    }
  }
  // Strip the extension.
  auto dot = id.rfind('.');
  if (dot != std::string::npos) id.resize(dot);
  return id;
}

bool has_wav_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".wav";
}

}  // namespace

DatasetManifest build_manifest(const fs::path& root, const std::vector<LabelingRule>& rules) {
  if (!fs::exists(root)) throw Error(ErrorCode::config_error, "dataset root does not exist: " + root.string());
  if (rules.empty()) throw Error(ErrorCode::config_error, "no labeling rules supplied");

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && has_wav_extension(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  DatasetManifest manifest;
  for (const auto& file : files) {
    std::string rel = fs::relative(file, root).generic_string();
    const LabelingRule* matched = nullptr;
    for (const auto& rule : rules) {
      if (glob_match(rule.pattern, rel)) {
        if (matched) {
          throw Error(ErrorCode::ambiguous_label,
                      "'" + rel + "' matches both '" + matched->pattern + "' and '" + rule.pattern + "'");
        }
        matched = &rule;
      }
    }
    if (!matched) continue;

    ManifestRow row;
    row.id = sanitize_id(rel);
    row.path = file.string();
    row.label = matched->label;
    row.subset_tag = matched->subset_tag;
    fs::path lyrics = file;
    lyrics.replace_extension(".txt");
    if (fs::exists(lyrics)) row.lyrics_path = lyrics.string();
    manifest.rows.push_back(std::move(row));
  }

  if (manifest.rows.empty()) {
    throw Error(ErrorCode::empty_dataset, "no audio files matched under " + root.string());
  }

  // Relative paths are unique, but sanitizing can collide; disambiguate.
  std::map<std::string, int> seen;
  for (auto& row : manifest.rows) {
    int& count = seen[row.id];
    if (count > 0) row.id += "_" + std::to_string(count);
    ++count;
  }
  return manifest;
}

void write_manifest_jsonl(const DatasetManifest& manifest, const fs::path& path) {
  std::ostringstream out;
  for (const auto& row : manifest.rows) {
    nlohmann::json obj = {
        {"id", row.id},
        {"path", row.path},
        {"label", label_name(row.label)},
        {"subset_tag", row.subset_tag},
        {"lyrics_path", row.lyrics_path ? nlohmann::json(*row.lyrics_path) : nlohmann::json(nullptr)},
    };
    out << obj.dump() << "\n";
  }
  write_text_file(path, out.str());
}

DatasetManifest read_manifest_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::missing_artifact, "manifest not found: " + path.string());
  DatasetManifest manifest;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json obj = nlohmann::json::parse(line);
    ManifestRow row;
    row.id = obj.at("id").get<std::string>();
    row.path = obj.at("path").get<std::string>();
    row.label = parse_label(obj.at("label").get<std::string>());
    row.subset_tag = obj.value("subset_tag", std::string{});
    if (obj.contains("lyrics_path") && !obj["lyrics_path"].is_null()) {
      row.lyrics_path = obj["lyrics_path"].get<std::string>();
    }
    manifest.rows.push_back(std::move(row));
  }
  if (manifest.rows.empty()) throw Error(ErrorCode::empty_dataset, "manifest is empty: " + path.string());
  return manifest;
}

}  // namespace mgmd
