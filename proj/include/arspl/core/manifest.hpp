#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "arspl/core/image.hpp"

namespace arspl {

struct ManifestEntry {
  std::string sequence_dir;
  int key_frame_index = 0;
  std::optional<std::string> ground_truth_path;
};

// {"train": [...], "val": [...], "test": [...]}; relative paths resolve
// against the manifest's directory.
struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> val;
  std::vector<ManifestEntry> test;
};

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

std::filesystem::path resolve(const Manifest& manifest, const std::string& p);

// Frames are the files matching frame_*.pgm in lexicographic order.
GraySequence load_sequence(const std::filesystem::path& dir, int key_frame_index);
void save_sequence(const GraySequence& seq, const std::filesystem::path& dir);

}  // namespace arspl
