#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "arspl/core/manifest.hpp"
#include "arspl/core/metrics.hpp"
#include "arspl/layersep/pseudo_label.hpp"
#include "arspl/segmodel/train.hpp"
#include "arspl/spl/self_paced.hpp"
#include "arspl/superpixel/slic.hpp"
#include "arspl/uncertainty/uncertainty.hpp"

namespace arspl::spl {

struct TrainingImage {
  GrayImage image;  // key frame
  LabelGrid pseudo_labels;
  layersep::VesselnessMap vesselness;
  superpixel::SuperpixelPartition partition;
  std::optional<LabelGrid> truth;
};

struct EvalImage {
  GrayImage image;
  LabelGrid truth;
  LabelGrid pseudo_labels;
};

struct Dataset {
  std::vector<TrainingImage> train;
  std::vector<EvalImage> val;
  std::vector<EvalImage> test;
};

struct DatasetConfig {
  layersep::PseudoLabelConfig pseudo;
  superpixel::SlicConfig slic;
};

// Loads every sequence of the manifest, generates pseudo labels for all
// splits and superpixels for the training key frames. Validation and test
// entries must carry ground truth.
Dataset prepare_dataset(const Manifest& manifest, const DatasetConfig& config = {});

nlohmann::json to_json(const DatasetConfig& config);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);

struct RunConfig {
  SplConfig spl;
  segmodel::TrainHyper hyper{.max_steps = 500};  // per alternation
  int initial_steps = 0;                          // first alternation, from scratch; 0 means hyper.max_steps
  int baseline_steps = 0;                         // single-shot baselines; 0 means hyper.max_steps
  int queries_per_image = 8;
  int mcdo_passes = 20;
  double theta = 0.4;
  uncertainty::EntropyForm entropy = uncertainty::EntropyForm::kSingleTerm;
  double dropout_rate = 0.2;
  std::array<int, 3> widths{8, 16, 32};
};

void validate(const RunConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

enum class Stage { kTrain, kAwaitAnnotations, kDone };

struct TrainState {
  int k = 1;
  Stage stage = Stage::kTrain;
  segmodel::SegModel model;
  std::vector<ImageState> images;
  std::vector<suggest::QueryBatch> pending;  // one per training image while awaiting
  std::vector<double> dice_history;
  std::vector<double> step_grad_norms;  // mini-batch gradient norm of every training step
  double final_grad_norm = 0.0;         // full-set gradient norm after the latest training round

  bool operator==(const TrainState&) const = default;
};

struct ConvergenceCheck {
  double final_grad_norm = 0.0;
  double trailing_median = 0.0;
  bool stable = false;  // final < 10 x trailing median
};

// Median of the last `window` step gradient norms against the full-set norm.
ConvergenceCheck check_convergence(const TrainState& state, std::size_t window = 100);

struct RunReport {
  std::string mode;
  int iterations = 0;
  std::vector<double> dice_history;  // mean validation dice after each alternation
  int annotated_superpixels = 0;
  double annotated_pixel_fraction = 0.0;
  MetricReport test_metrics;
  ConvergenceCheck convergence;
};

nlohmann::json to_json(const RunReport& report);

struct RunResult {
  bool finished = false;  // false when the annotator aborted; state is resumable
  TrainState state;
  RunReport report;
};

// Called after every stage transition with the new state.
using TransitionHook = std::function<void(const TrainState&)>;

TrainState initial_state(const Dataset& data, const RunConfig& cfg, std::uint64_t seed);

// Alternating minimization. Each alternation k:
//   1. train on (Y, V), warm-started from the current model
//   2. Y <- model prediction, overridden by Q*
//   3. query the most uncertain superpixels, refine Y and V with the answers
//   4. V <- SPLD weights from the losses under pace(k), omega on annotated pixels
//   5. mean validation dice; stop when its increment falls below the
//      threshold or k reaches max_alt_iters.
// NoAR skips 3; NoSPL skips 2 and 4 and, after a first round on the pseudo
// labels with V = 1, trains on annotated pixels only. The single-shot
// baselines (NS, FS, PL) ignore the annotator. Passing `resume` continues a
// previously persisted state.
RunResult arspl_run(const Dataset& data, const RunConfig& cfg, suggest::Annotator& annotator, std::uint64_t seed,
                    const TransitionHook& on_transition = {}, std::optional<TrainState> resume = std::nullopt);

RunReport make_report(const Dataset& data, const RunConfig& cfg, const TrainState& state);

// state.json (everything but the model) plus model.ckpt inside `dir`.
void save_state(const TrainState& state, const std::filesystem::path& dir);
TrainState load_state(const std::filesystem::path& dir);

}  // namespace arspl::spl
