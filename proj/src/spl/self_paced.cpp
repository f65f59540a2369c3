#include "arspl/spl/self_paced.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "arspl/core/error.hpp"
#include "arspl/segmodel/predict.hpp"

namespace arspl::spl {

std::string mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::kArSpl: return "AR-SPL";
    case RunMode::kNoAr: return "AR-SPL-NoAR";
    case RunMode::kNoSpl: return "AR-SPL-NoSPL";
    case RunMode::kBaselineNs: return "Baseline-NS";
    case RunMode::kBaselineFs: return "Baseline-FS";
    case RunMode::kBaselinePl: return "Baseline-PL";
  }
  return "unknown";
}

RunMode parse_mode(const std::string& text) {
  static const std::pair<const char*, RunMode> kShort[] = {
      {"arspl", RunMode::kArSpl},     {"noar", RunMode::kNoAr},       {"nospl", RunMode::kNoSpl},
      {"ns", RunMode::kBaselineNs}, {"fs", RunMode::kBaselineFs}, {"pl", RunMode::kBaselinePl}};
  for (const auto& [name, mode] : kShort) {
    if (text == name || text == mode_name(mode)) return mode;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown run mode '" + text + "'");
}

void validate(const SplConfig& cfg) {
  if (!(cfg.tau0 > 0.0) || !(cfg.gamma0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau0 and gamma0 must be > 0");
  if (!(cfg.mu > 0.0)) throw Error(ErrorCode::kInvalidArgument, "mu must be > 0");
  if (!(cfg.omega > 1.0)) throw Error(ErrorCode::kInvalidArgument, "omega must be > 1");
  if (!(cfg.lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  if (!(cfg.stop_dice_increment > 0.0)) throw Error(ErrorCode::kInvalidArgument, "stop increment must be > 0");
  if (cfg.max_alt_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max_alt_iters must be >= 1");
}

LatentWeights init_latent_weights(const layersep::VesselnessMap& map) {
  LatentWeights w{std::vector<double>(map.values.size()), std::vector<std::uint8_t>(map.values.size(), 0)};
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    w.v[i] = std::min(4.0 * std::abs(map.values[i] - 0.5), 1.0);
  }
  return w;
}

PaceParams pace_params(int k, const SplConfig& cfg) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "iteration index must be >= 1");
  const double t = std::max(cfg.tau0 - cfg.mu * k, kPaceFloor);
  const double g = std::max(cfg.gamma0 - cfg.mu * k, kPaceFloor);
  return {-std::log(t), -std::log(g)};
}

std::vector<double> spld_assign(std::span<const double> losses, const PaceParams& pace) {
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
  std::vector<double> v(losses.size(), 0.0);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double o = static_cast<double>(r + 1);
    const double threshold = pace.tau + pace.gamma / (std::sqrt(o) + std::sqrt(o - 1.0));
    if (losses[order[r]] < threshold) v[order[r]] = 1.0;
  }
  return v;
}

double spld_objective(std::span<const double> losses, std::span<const double> weights, const PaceParams& pace) {
  if (losses.size() != weights.size()) throw Error(ErrorCode::kDimensionMismatch, "losses and weights differ in size");
  double data = 0.0;
  double total = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    data += weights[i] * losses[i];
    total += weights[i];
    sq += weights[i] * weights[i];
  }
  return data - pace.tau * total - pace.gamma * std::sqrt(sq);
}

void override_with_annotations(LabelGrid& labels, const suggest::AnnotationStore& store,
                               const superpixel::SuperpixelPartition& partition) {
  for (const auto& [id, values] : store.labeled) {
    const auto& members = partition.members.at(static_cast<std::size_t>(id));
    for (std::size_t i = 0; i < members.size(); ++i) labels.labels[members[i]] = values[i];
  }
}

LabelGrid update_self_paced_labels(const segmodel::SegModel& model, const GrayImage& image,
                                   const suggest::AnnotationStore& store,
                                   const superpixel::SuperpixelPartition& partition) {
  LabelGrid labels = segmodel::predict_binary(model, image);
  override_with_annotations(labels, store, partition);
  return labels;
}

void apply_refinement(ImageState& state, const superpixel::SuperpixelPartition& partition,
                      const suggest::AnnotationSet& annotations, double omega) {
  std::set<int> seen;
  for (const auto& sp : annotations.superpixels) {
    if (sp.id < 0 || sp.id >= partition.n_superpixels) {
      throw Error(ErrorCode::kUnknownSuperpixel, "unknown superpixel " + std::to_string(sp.id));
    }
    if (state.annotations.contains(sp.id) || !seen.insert(sp.id).second) {
      throw Error(ErrorCode::kAlreadyLabeled, "superpixel " + std::to_string(sp.id) + " is already labeled");
    }
    if (sp.labels.size() != partition.members[sp.id].size()) {
      throw Error(ErrorCode::kPartialSuperpixel,
                  "annotation of superpixel " + std::to_string(sp.id) + " does not cover it exactly");
    }
  }
  suggest::merge_annotations(state.annotations, annotations);
  for (const auto& sp : annotations.superpixels) {
    const auto& members = partition.members[sp.id];
    for (std::size_t i = 0; i < members.size(); ++i) {
      const int p = members[i];
      state.labels.labels[p] = sp.labels[i];
      state.weights.v[p] = omega;
      state.weights.annotated[p] = 1;
    }
  }
}

void restore_annotation_weights(LatentWeights& weights, double omega) {
  for (std::size_t i = 0; i < weights.v.size(); ++i) {
    if (weights.annotated[i]) weights.v[i] = omega;
  }
}

}  // namespace arspl::spl
