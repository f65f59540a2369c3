#pragma once

// Forward/backward passes of the fixed encoder/decoder. Internal to the
// segmodel library.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "arspl/core/image.hpp"
#include "arspl/segmodel/model.hpp"

namespace arspl::segmodel::detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kConvCount = 11;
inline constexpr int kDropoutLayers = 2;

struct DropoutSpec {
  bool enabled = false;
  std::uint64_t seed = 0;
};

struct ForwardCache {
  int height = 0;
  int width = 0;
  std::vector<RowMat> cols;  // im2col input of each conv (the raw input for 1x1)
  std::vector<RowMat> outs;  // post-ReLU output of convs 0..9
  std::vector<std::vector<int>> pool_argmax;
  std::vector<std::vector<double>> dropout_masks;  // empty when dropout is off
};

// Image whose sides are multiples of 4, built by reflection padding.
struct PaddedImage {
  GrayImage image;
  int orig_width = 0;
  int orig_height = 0;
};

PaddedImage pad_to_multiple_of_4(const GrayImage& image);

// Returns the 2 x HW softmax probabilities (row 0 background, row 1 vessel).
RowMat forward(const SegModel& model, const GrayImage& image, const DropoutSpec& dropout,
               ForwardCache* cache);

// Accumulates parameter gradients for the logits gradient `dlogits` (2 x HW).
void backward(const SegModel& model, const ForwardCache& cache, const RowMat& dlogits,
              std::vector<std::vector<double>>& grads);

std::vector<std::vector<double>> zero_gradients(const SegModel& model);

}  // namespace arspl::segmodel::detail
