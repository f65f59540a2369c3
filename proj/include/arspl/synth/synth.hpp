#pragma once

#include <cstdint>
#include <vector>

#include "arspl/core/image.hpp"

namespace arspl::synth {

// Parameters of one synthetic angiogram sequence. An empty contrast_profile
// is replaced by default_contrast_profile(n_frames).
struct SynthConfig {
  std::uint64_t seed = 1;
  int width = 64;
  int height = 64;
  int n_frames = 20;
  int vessel_branches = 3;
  double max_vessel_width = 4.0;
  // Opacity of a child branch relative to its parent (drawn from
  // [0.85, 1.0] times this ratio).
  double branch_opacity_ratio = 0.6;
  int background_rank = 2;
  double noise_sigma = 0.02;
  std::vector<double> contrast_profile;
};

struct SynthSample {
  GraySequence sequence;
  LabelGrid truth;
  // Static background (before vessels and noise); exposed for tests.
  GrayImage background;
};

// Inflow / washout opacity curve peaking (value 1) at frame n_frames / 2.
std::vector<double> default_contrast_profile(int n_frames);

// Throws Error(kInvalidArgument) on an invalid configuration.
void validate(const SynthConfig& config);

// Frame t = clamp(background - contrast[t] * vessels + noise). The key frame
// is the first maximum of the contrast profile. Bit-identical for equal
// configs.
SynthSample generate_sequence(const SynthConfig& config);

}  // namespace arspl::synth
