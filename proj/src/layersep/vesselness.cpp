#include "arspl/layersep/vesselness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "arspl/core/error.hpp"

namespace arspl::layersep {

VesselnessMap vesselness_from_layer(const LayerPair& pair, int key_frame, int width, int height) {
  if (key_frame < 0 || key_frame >= pair.sparse.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "key frame index out of range");
  }
  if (static_cast<Eigen::Index>(width) * height != pair.sparse.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "layer rows do not match image dimensions");
  }
  VesselnessMap map{width, height, std::vector<double>(pair.sparse.rows(), 0.0)};
  double peak = 0.0;
  for (Eigen::Index i = 0; i < pair.sparse.rows(); ++i) {
    map.values[i] = std::max(0.0, pair.sparse(i, key_frame));
    peak = std::max(peak, map.values[i]);
  }
  if (peak < 1e-12) {
    std::fill(map.values.begin(), map.values.end(), 0.0);
  } else {
    for (double& v : map.values) v = v / peak;
  }
  return map;
}

int otsu_bin(double value) {
  return static_cast<int>(std::lround(std::clamp(value, 0.0, 1.0) * 255.0));
}

OtsuResult otsu_threshold(const VesselnessMap& map) {
  std::array<std::int64_t, 256> hist{};
  for (double v : map.values) ++hist[otsu_bin(v)];

  const std::int64_t total = static_cast<std::int64_t>(map.values.size());
  std::int64_t total_sum = 0;
  for (int b = 0; b < 256; ++b) total_sum += b * hist[b];

  // Between-class variance up to the constant factor 1/N^2:
  // (S0 * N1 - S1 * N0)^2 / (N0 * N1). Counts and sums are exact integers,
  // and candidates are compared by cross-multiplication so ties are exact.
  // The 128-bit products cannot overflow below kExactLimit pixels.
  constexpr std::int64_t kExactLimit = 500000;
  const bool exact = total <= kExactLimit;
  std::int64_t n0 = 0, s0 = 0;
  __int128 best_num = 0, best_den = 1;
  double best = 0.0;
  int best_t = 0;
  for (int t = 0; t < 256; ++t) {
    n0 += hist[t];
    s0 += static_cast<std::int64_t>(t) * hist[t];
    const std::int64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const std::int64_t s1 = total_sum - s0;
    if (exact) {
      const __int128 diff = static_cast<__int128>(s0) * n1 - static_cast<__int128>(s1) * n0;
      const __int128 num = diff * diff;
      const __int128 den = static_cast<__int128>(n0) * n1;
      if (num * best_den > best_num * den) {
        best_num = num;
        best_den = den;
        best_t = t;
      }
    } else {
      const double diff = static_cast<double>(s0) * static_cast<double>(n1) -
                          static_cast<double>(s1) * static_cast<double>(n0);
      const double score = diff * diff / (static_cast<double>(n0) * static_cast<double>(n1));
      if (score > best) {
        best = score;
        best_t = t;
      }
    }
  }
  if (exact) best = best_num > 0 ? 1.0 : 0.0;

  OtsuResult out{LabelGrid(map.width, map.height, 0), 0, false};
  if (best <= 0.0) {
    out.degenerate = true;
    return out;
  }
  out.threshold = best_t;
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    out.labels.labels[i] = otsu_bin(map.values[i]) > best_t ? 1 : 0;
  }
  return out;
}

}  // namespace arspl::layersep
