#pragma once

#include <vector>

#include "arspl/core/image.hpp"
#include "arspl/layersep/rpca.hpp"

namespace arspl::layersep {

// Per-pixel vessel likelihood in [0,1].
struct VesselnessMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  bool operator==(const VesselnessMap&) const = default;
};

// Key-frame column of the sparse layer, negatives clamped to 0, divided by
// its maximum. All-zero when the maximum is below 1e-12.
VesselnessMap vesselness_from_layer(const LayerPair& pair, int key_frame, int width, int height);

struct OtsuResult {
  LabelGrid labels;
  int threshold = 0;  // bin index in [0, 255]; label 1 iff bin > threshold
  bool degenerate = false;
};

// Values are binned with round(v * 255). The threshold maximizes the
// between-class variance; ties go to the lowest threshold. A map with a
// single occupied bin yields all-background labels and degenerate = true.
OtsuResult otsu_threshold(const VesselnessMap& map);

int otsu_bin(double value);

}  // namespace arspl::layersep
