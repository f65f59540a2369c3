#include "arspl/uncertainty/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include "arspl/core/error.hpp"

namespace arspl::uncertainty {

namespace {

constexpr double kDegenerate = 1e-12;

void normalize_by_max(std::vector<double>& values) {
  const double peak = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  if (peak < kDegenerate) {
    std::fill(values.begin(), values.end(), 0.0);
    return;
  }
  for (double& v : values) v /= peak;
}

double xlogx(double x, double log_scale) { return x > 0.0 ? x * std::log(x) * log_scale : 0.0; }

}  // namespace

UncertaintyMap model_uncertainty(const segmodel::ExpectationMap& e, EntropyForm form, double log_base) {
  double log_scale = 1.0;
  if (log_base != 0.0) {
    if (!(log_base > 0.0) || log_base == 1.0) throw Error(ErrorCode::kInvalidArgument, "invalid log base");
    log_scale = 1.0 / std::log(log_base);
  }
  UncertaintyMap out{e.width, e.height, UncertaintyKind::kModel, std::vector<double>(e.values.size())};
  for (std::size_t i = 0; i < e.values.size(); ++i) {
    const double p = std::clamp(e.values[i], 0.0, 1.0);
    double h = -xlogx(p, log_scale);
    if (form == EntropyForm::kBinary) h -= xlogx(1.0 - p, log_scale);
    out.values[i] = std::max(0.0, h);
  }
  normalize_by_max(out.values);
  return out;
}

UncertaintyMap vesselness_uncertainty(const layersep::VesselnessMap& s) {
  UncertaintyMap out{s.width, s.height, UncertaintyKind::kVesselness, std::vector<double>(s.values.size())};
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const double v = std::clamp(s.values[i], 0.0, 1.0);
    out.values[i] = v * (1.0 - v);
  }
  normalize_by_max(out.values);
  return out;
}

double eta(int k, double theta) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "iteration index must be >= 1");
  if (!(theta > 0.0 && theta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "decay rate must lie in (0, 1]");
  const double span = 1.0 / theta;
  const double elapsed = static_cast<double>(k - 1);
  if (!(elapsed < span)) return 0.0;
  return (span - elapsed) / span;
}

UncertaintyMap fuse_pixelwise(const UncertaintyMap& m, const UncertaintyMap& g, double eta_value) {
  require_same_shape(m.width, m.height, g.width, g.height, "fuse_pixelwise");
  UncertaintyMap out{m.width, m.height, UncertaintyKind::kFusedPixelwise, std::vector<double>(m.values.size())};
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    out.values[i] = std::max(eta_value * g.values[i], (1.0 - eta_value) * m.values[i]);
  }
  return out;
}

SuperpixelUncertainty fuse_mvu(const UncertaintyMap& m, const UncertaintyMap& g, double eta_value,
                               const superpixel::SuperpixelPartition& partition) {
  require_same_shape(m.width, m.height, partition.width, partition.height, "fuse_mvu");
  const UncertaintyMap f = fuse_pixelwise(m, g, eta_value);
  SuperpixelUncertainty out{std::vector<double>(partition.n_superpixels, 0.0)};
  for (int q = 0; q < partition.n_superpixels; ++q) {
    const auto& members = partition.members[q];
    if (members.empty()) continue;
    double sum = 0.0;
    for (int p : members) sum += f.values[p];
    out.values[q] = sum / static_cast<double>(members.size());
  }
  return out;
}

GrayImage to_image(const UncertaintyMap& map) { return GrayImage(map.width, map.height, map.values); }

}  // namespace arspl::uncertainty
