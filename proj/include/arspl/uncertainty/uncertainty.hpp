#pragma once

#include <vector>

#include "arspl/core/image.hpp"
#include "arspl/layersep/vesselness.hpp"
#include "arspl/segmodel/predict.hpp"
#include "arspl/superpixel/slic.hpp"

namespace arspl::uncertainty {

enum class UncertaintyKind { kModel, kVesselness, kFusedPixelwise };

// Per-pixel uncertainty in [0,1]; the maximum is 1 unless the map is all zero.
struct UncertaintyMap {
  int width = 0;
  int height = 0;
  UncertaintyKind kind = UncertaintyKind::kModel;
  std::vector<double> values;
};

// One value per superpixel id.
struct SuperpixelUncertainty {
  std::vector<double> values;
};

// kSingleTerm is -E log E, the default. kBinary is the full binary entropy
// -E log E - (1 - E) log(1 - E).
enum class EntropyForm { kSingleTerm, kBinary };

// Entropy of the MC-dropout expectation, divided by its maximum over the
// image. All-zero when that maximum is below 1e-12. `log_base` only exists to
// demonstrate that the normalized map does not depend on it.
UncertaintyMap model_uncertainty(const segmodel::ExpectationMap& expectation,
                                 EntropyForm form = EntropyForm::kSingleTerm, double log_base = 0.0);

// s (1 - s) divided by its maximum; all-zero when that maximum is below 1e-12.
UncertaintyMap vesselness_uncertainty(const layersep::VesselnessMap& vesselness);

// Soft switch between vesselness (early) and model (late) uncertainty:
// 1 - theta (k - 1) while k < 1 + 1/theta, else 0. Evaluated as
// (T - (k - 1)) / T with T = 1/theta, so rates with an exact reciprocal
// (0.4, 0.5, 1) give exactly representable decimals.
double eta(int k, double theta);

// f_j = max(eta G_j, (1 - eta) M_j), averaged within each superpixel.
UncertaintyMap fuse_pixelwise(const UncertaintyMap& model, const UncertaintyMap& vesselness, double eta);
SuperpixelUncertainty fuse_mvu(const UncertaintyMap& model, const UncertaintyMap& vesselness, double eta,
                               const superpixel::SuperpixelPartition& partition);

// Heat image for display and debugging.
GrayImage to_image(const UncertaintyMap& map);

}  // namespace arspl::uncertainty
