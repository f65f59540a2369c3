#include "arspl/core/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "arspl/core/error.hpp"
#include "arspl/core/pgm.hpp"

namespace arspl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<ManifestEntry> parse_split(const json& root, const char* name) {
  std::vector<ManifestEntry> out;
  if (!root.contains(name)) return out;
  const json& arr = root.at(name);
  if (!arr.is_array()) throw Error(ErrorCode::kInvalidManifest, std::string("split ") + name + " is not an array");
  for (const json& e : arr) {
    if (!e.is_object() || !e.contains("sequence_dir") || !e.at("sequence_dir").is_string()) {
      throw Error(ErrorCode::kInvalidManifest, std::string("entry in ") + name + " lacks sequence_dir");
    }
    ManifestEntry entry;
    entry.sequence_dir = e.at("sequence_dir").get<std::string>();
    entry.key_frame_index = e.value("key_frame_index", 0);
    if (e.contains("ground_truth_path") && !e.at("ground_truth_path").is_null()) {
      entry.ground_truth_path = e.at("ground_truth_path").get<std::string>();
    }
    out.push_back(std::move(entry));
  }
  return out;
}

json split_to_json(const std::vector<ManifestEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    json j = {{"sequence_dir", e.sequence_dir}, {"key_frame_index", e.key_frame_index}};
    if (e.ground_truth_path) j["ground_truth_path"] = *e.ground_truth_path;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidManifest, "cannot open manifest " + path.string());
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidManifest, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw Error(ErrorCode::kInvalidManifest, "manifest root must be an object");
  Manifest m;
  m.base_dir = fs::absolute(path).parent_path();
  try {
    m.train = parse_split(root, "train");
    m.val = parse_split(root, "val");
    m.test = parse_split(root, "test");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidManifest, std::string("manifest field has wrong type: ") + e.what());
  }
  return m;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  json root = {{"train", split_to_json(manifest.train)},
               {"val", split_to_json(manifest.val)},
               {"test", split_to_json(manifest.test)}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << root.dump(2) << "\n";
}

fs::path resolve(const Manifest& manifest, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : manifest.base_dir / path;
}

GraySequence load_sequence(const fs::path& dir, int key_frame_index) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "sequence directory missing: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("frame_", 0) == 0 && entry.path().extension() == ".pgm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<GrayImage> frames;
  frames.reserve(files.size());
  for (const auto& f : files) frames.push_back(load_pgm(f));
  return GraySequence(std::move(frames), key_frame_index);
}

void save_sequence(const GraySequence& seq, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03zu.pgm", t);
    save_pgm(seq.frames[t], dir / name);
  }
}

}  // namespace arspl
