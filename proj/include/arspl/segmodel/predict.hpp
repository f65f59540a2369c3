#pragma once

#include <cstdint>
#include <vector>

#include "arspl/core/image.hpp"
#include "arspl/segmodel/model.hpp"

namespace arspl::segmodel {

// Foreground probability per pixel.
struct ProbMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  bool operator==(const ProbMap&) const = default;
};

// Mean of `passes` binarized MC-dropout predictions per pixel.
struct ExpectationMap {
  int width = 0;
  int height = 0;
  int passes = 0;
  std::vector<double> values;

  bool operator==(const ExpectationMap&) const = default;
};

// Inference with dropout disabled. Sizes not divisible by 4 are reflect-padded
// and the output cropped back.
ProbMap predict_proba(const SegModel& model, const GrayImage& image);

// Label 1 iff the foreground probability is >= 0.5, which is the per-pixel
// minimizer of the cross-entropy over y in {0,1}.
LabelGrid binarize(const ProbMap& prob);
LabelGrid predict_binary(const SegModel& model, const GrayImage& image);

// `passes` stochastic forward passes with dropout active. The mask of pass d
// depends only on (seed, d), so the result does not depend on the number of
// workers.
ExpectationMap mcdo_expectation(const SegModel& model, const GrayImage& image, int passes,
                                std::uint64_t seed);

// -log p(y_j) per pixel, with p clamped to >= 1e-12.
std::vector<double> pixel_cross_entropy(const ProbMap& prob, const LabelGrid& labels);

}  // namespace arspl::segmodel
