#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace arspl {

// Row-major grayscale image with intensities in [0,1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0);
  GrayImage(int w, int h, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const GrayImage&) const = default;
};

// Temporal stack of same-sized frames with a designated key frame.
struct GraySequence {
  std::vector<GrayImage> frames;
  int key_frame_index = 0;

  GraySequence() = default;
  GraySequence(std::vector<GrayImage> frames, int key_frame_index);

  int width() const { return frames.front().width; }
  int height() const { return frames.front().height; }
  const GrayImage& key_frame() const { return frames[key_frame_index]; }
};

// Per-pixel binary labels: 0 = background, 1 = vessel.
struct LabelGrid {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;

  LabelGrid() = default;
  LabelGrid(int w, int h, std::uint8_t fill = 0);
  LabelGrid(int w, int h, std::vector<std::uint8_t> values);

  std::size_t size() const { return labels.size(); }
  std::size_t foreground_count() const;

  bool operator==(const LabelGrid&) const = default;
};

void require_same_shape(int w0, int h0, int w1, int h1, const char* what);

}  // namespace arspl
