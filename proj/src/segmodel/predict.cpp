#include "arspl/segmodel/predict.hpp"

#include <algorithm>
#include <cmath>

#include "arspl/core/error.hpp"
#include "arspl/core/parallel.hpp"
#include "arspl/core/rng.hpp"
#include "network.hpp"

namespace arspl::segmodel {

namespace {

// Foreground probabilities cropped back to the original image.
std::vector<double> crop_foreground(const detail::RowMat& probs, const detail::PaddedImage& padded) {
  std::vector<double> out(static_cast<std::size_t>(padded.orig_width) * padded.orig_height);
  const int pw = padded.image.width;
  for (int y = 0; y < padded.orig_height; ++y) {
    for (int x = 0; x < padded.orig_width; ++x) {
      out[static_cast<std::size_t>(y) * padded.orig_width + x] = probs(1, y * pw + x);
    }
  }
  return out;
}

}  // namespace

ProbMap predict_proba(const SegModel& model, const GrayImage& image) {
  const detail::PaddedImage padded = detail::pad_to_multiple_of_4(image);
  const detail::RowMat probs = detail::forward(model, padded.image, {}, nullptr);
  return {image.width, image.height, crop_foreground(probs, padded)};
}

LabelGrid binarize(const ProbMap& prob) {
  LabelGrid out(prob.width, prob.height, 0);
  for (std::size_t i = 0; i < prob.values.size(); ++i) out.labels[i] = prob.values[i] >= 0.5 ? 1 : 0;
  return out;
}

LabelGrid predict_binary(const SegModel& model, const GrayImage& image) {
  return binarize(predict_proba(model, image));
}

ExpectationMap mcdo_expectation(const SegModel& model, const GrayImage& image, int passes, std::uint64_t seed) {
  if (passes < 1) throw Error(ErrorCode::kInvalidArgument, "MCDO needs at least one pass");
  const detail::PaddedImage padded = detail::pad_to_multiple_of_4(image);
  std::vector<std::vector<std::uint8_t>> votes(passes);
  parallel_for(static_cast<std::size_t>(passes), [&](std::size_t d) {
    const detail::DropoutSpec spec{true, derive_seed(seed, {0x3cd0, d})};
    const std::vector<double> fg = crop_foreground(detail::forward(model, padded.image, spec, nullptr), padded);
    votes[d].resize(fg.size());
    for (std::size_t i = 0; i < fg.size(); ++i) votes[d][i] = fg[i] >= 0.5 ? 1 : 0;
  });
  ExpectationMap out{image.width, image.height, passes, std::vector<double>(image.data.size(), 0.0)};
  std::vector<int> count(image.data.size(), 0);
  for (const auto& v : votes) {
    for (std::size_t i = 0; i < v.size(); ++i) count[i] += v[i];
  }
  for (std::size_t i = 0; i < count.size(); ++i) out.values[i] = static_cast<double>(count[i]) / passes;
  return out;
}

std::vector<double> pixel_cross_entropy(const ProbMap& prob, const LabelGrid& labels) {
  require_same_shape(prob.width, prob.height, labels.width, labels.height, "pixel_cross_entropy");
  std::vector<double> out(prob.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double p = labels.labels[i] ? prob.values[i] : 1.0 - prob.values[i];
    out[i] = -std::log(std::max(p, 1e-12));
  }
  return out;
}

}  // namespace arspl::segmodel
