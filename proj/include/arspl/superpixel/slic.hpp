#pragma once

#include <filesystem>
#include <vector>

#include "arspl/core/image.hpp"

namespace arspl::superpixel {

// Pixel -> superpixel assignment. Ids are dense in [0, n_superpixels), each
// superpixel is 4-connected and `members[id]` lists its pixel indices in
// ascending order.
struct SuperpixelPartition {
  int width = 0;
  int height = 0;
  int n_superpixels = 0;
  std::vector<int> assignment;
  std::vector<std::vector<int>> members;

  bool operator==(const SuperpixelPartition&) const = default;
};

struct SlicConfig {
  int target_count = 0;  // 0 selects default_superpixel_count
  double compactness = 0.1;
  int iterations = 10;
};

// 3000 superpixels per 512x512 pixels, scaled by area.
int default_superpixel_count(int width, int height);

// Grayscale SLIC: k-means on (intensity, x, y) from grid-seeded centres with
// distance sqrt(dI^2 + (compactness / S)^2 dxy^2), S the grid interval,
// followed by merging of disconnected fragments into the largest adjacent
// superpixel.
SuperpixelPartition slic(const GrayImage& image, int target_count, double compactness = 0.1,
                         int iterations = 10);
SuperpixelPartition slic(const GrayImage& image, const SlicConfig& config);

// Rebuilds `members` and `n_superpixels` from `assignment`.
SuperpixelPartition partition_from_assignment(int width, int height, std::vector<int> assignment);

// 16-bit little-endian ids, row-major, plus a JSON sidecar at
// <path>.json holding {"n_superpixels", "width", "height"}.
void save_partition(const SuperpixelPartition& partition, const std::filesystem::path& path);
SuperpixelPartition load_partition(const std::filesystem::path& path);

}  // namespace arspl::superpixel
