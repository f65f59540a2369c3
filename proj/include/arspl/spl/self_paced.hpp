#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arspl/core/image.hpp"
#include "arspl/layersep/vesselness.hpp"
#include "arspl/segmodel/model.hpp"
#include "arspl/suggest/suggest.hpp"
#include "arspl/superpixel/slic.hpp"

namespace arspl::spl {

enum class RunMode { kArSpl, kNoAr, kNoSpl, kBaselineNs, kBaselineFs, kBaselinePl };

// Report names: "AR-SPL", "AR-SPL-NoAR", ...
std::string mode_name(RunMode mode);
// Accepts the report names and the short CLI forms arspl|noar|nospl|ns|fs|pl.
RunMode parse_mode(const std::string& text);

// Unannotated pixels carry v in [0,1]; annotated pixels carry exactly omega.
struct LatentWeights {
  std::vector<double> v;
  std::vector<std::uint8_t> annotated;

  bool operator==(const LatentWeights&) const = default;
};

struct PaceParams {
  double tau = 0.0;
  double gamma = 0.0;
};

struct SplConfig {
  double tau0 = 0.75;
  double gamma0 = 0.20;
  double mu = 0.01;
  double omega = 5.0;
  double lambda = 1e-4;
  double stop_dice_increment = 0.0005;
  int max_alt_iters = 20;
  RunMode mode = RunMode::kArSpl;
};

void validate(const SplConfig& cfg);

// Working state of one training image.
struct ImageState {
  LabelGrid labels;  // self-paced labels Y
  LatentWeights weights;
  suggest::AnnotationStore annotations;  // Q*

  bool operator==(const ImageState&) const = default;
};

// Soft threshold on the vesselness map: v = min(4 |s - 0.5|, 1).
LatentWeights init_latent_weights(const layersep::VesselnessMap& map);

inline constexpr double kPaceFloor = 1e-3;

// tau = -ln(max(tau0 - mu k, 1e-3)), gamma likewise.
PaceParams pace_params(int k, const SplConfig& cfg);

// Closed-form minimizer of sum v l - tau sum v - gamma sqrt(sum v) over binary
// v: with losses sorted ascending (stable), rank o (1-based) is selected iff
// its loss < tau + gamma / (sqrt(o) + sqrt(o - 1)).
std::vector<double> spld_assign(std::span<const double> losses, const PaceParams& pace);

// The objective above, for checking.
double spld_objective(std::span<const double> losses, std::span<const double> weights, const PaceParams& pace);

// Stored annotations overwrite the labels of their pixels.
void override_with_annotations(LabelGrid& labels, const suggest::AnnotationStore& store,
                               const superpixel::SuperpixelPartition& partition);

// predict_binary followed by the annotation override.
LabelGrid update_self_paced_labels(const segmodel::SegModel& model, const GrayImage& image,
                                   const suggest::AnnotationStore& store,
                                   const superpixel::SuperpixelPartition& partition);

// Writes the annotated labels into Y, sets v = omega there and extends Q*.
// All-or-nothing: throws Error(kAlreadyLabeled) for a superpixel already in
// Q*, Error(kPartialSuperpixel) when the label count differs from the
// superpixel's size and Error(kUnknownSuperpixel) for an id outside the
// partition.
void apply_refinement(ImageState& state, const superpixel::SuperpixelPartition& partition,
                      const suggest::AnnotationSet& annotations, double omega);

// Restores v = omega on every annotated pixel.
void restore_annotation_weights(LatentWeights& weights, double omega);

}  // namespace arspl::spl
