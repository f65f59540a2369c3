#pragma once

#include "arspl/core/image.hpp"
#include "arspl/layersep/vesselness.hpp"

namespace arspl::layersep {

struct PseudoLabelConfig {
  int disk_diameter = 20;
  double xi_scale = 0.8;
  double tol = 1e-6;
  int max_iter = 500;
  double rho = 1.5;
};

struct PseudoLabel {
  VesselnessMap vesselness;
  LabelGrid labels;
  bool otsu_degenerate = false;
  int rpca_iterations = 0;
  double rpca_residual = 0.0;
  bool rpca_converged = false;
};

// Closing difference, RPCA on the whole sequence, key-frame vesselness and
// Otsu binarization.
PseudoLabel generate_pseudo_label(const GraySequence& seq, const PseudoLabelConfig& config = {});

}  // namespace arspl::layersep
