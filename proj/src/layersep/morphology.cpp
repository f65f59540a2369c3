#include "arspl/layersep/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "arspl/core/error.hpp"

namespace arspl::layersep {

namespace {

// Half-width of the disk chord at each vertical offset dy in [-r, r].
std::vector<int> disk_chords(int diameter, int& radius) {
  const double rr = 0.25 * diameter * diameter;
  radius = diameter / 2;
  std::vector<int> half(2 * radius + 1);
  for (int dy = -radius; dy <= radius; ++dy) {
    half[dy + radius] = static_cast<int>(std::floor(std::sqrt(rr - dy * dy) + 1e-12));
  }
  return half;
}

// Sliding-window extremum of one row with window [x - hw, x + hw], clipped to
// the row. `better(a, b)` is true when a should replace b.
template <typename Better>
void sliding_extremum(const double* row, int width, int hw, double* out, Better better) {
  std::deque<int> window;
  int next = 0;
  for (int x = 0; x < width; ++x) {
    const int hi = std::min(width - 1, x + hw);
    for (; next <= hi; ++next) {
      while (!window.empty() && !better(row[window.back()], row[next])) window.pop_back();
      window.push_back(next);
    }
    while (window.front() < x - hw) window.pop_front();
    out[x] = row[window.front()];
  }
}

template <typename Better>
GrayImage disk_filter(const GrayImage& image, int diameter, Better better) {
  if (diameter < 1) throw Error(ErrorCode::kInvalidArgument, "disk diameter must be >= 1");
  int radius = 0;
  const std::vector<int> half = disk_chords(diameter, radius);
  const int w = image.width, h = image.height;
  GrayImage out = image;
  std::vector<double> line(w);
  for (int y = 0; y < h; ++y) {
    double* dst = &out.data[static_cast<std::size_t>(y) * w];
    for (int dy = -radius; dy <= radius; ++dy) {
      const int sy = y + dy;
      if (sy < 0 || sy >= h) continue;
      sliding_extremum(&image.data[static_cast<std::size_t>(sy) * w], w, half[dy + radius], line.data(),
                       better);
      for (int x = 0; x < w; ++x) {
        if (better(line[x], dst[x])) dst[x] = line[x];
      }
    }
  }
  return out;
}

}  // namespace

GrayImage dilate_disk(const GrayImage& image, int diameter) {
  return disk_filter(image, diameter, [](double a, double b) { return a > b; });
}

GrayImage erode_disk(const GrayImage& image, int diameter) {
  return disk_filter(image, diameter, [](double a, double b) { return a < b; });
}

GrayImage close_disk(const GrayImage& image, int diameter) {
  return erode_disk(dilate_disk(image, diameter), diameter);
}

GraySequence difference_sequence(const GraySequence& seq, int disk_diameter) {
  if (disk_diameter < 1) throw Error(ErrorCode::kInvalidArgument, "disk diameter must be >= 1");
  if (disk_diameter > std::min(seq.width(), seq.height())) {
    throw Error(ErrorCode::kInvalidArgument,
                "disk diameter " + std::to_string(disk_diameter) + " exceeds the image");
  }
  std::vector<GrayImage> frames;
  frames.reserve(seq.frames.size());
  for (const GrayImage& frame : seq.frames) {
    GrayImage closed = close_disk(frame, disk_diameter);
    for (std::size_t i = 0; i < closed.data.size(); ++i) {
      closed.data[i] = std::max(0.0, closed.data[i] - frame.data[i]);
    }
    frames.push_back(std::move(closed));
  }
  return GraySequence(std::move(frames), seq.key_frame_index);
}

}  // namespace arspl::layersep
