#include "arspl/spl/run.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "arspl/core/error.hpp"
#include "arspl/core/parallel.hpp"
#include "arspl/core/rng.hpp"
#include "arspl/segmodel/predict.hpp"

namespace arspl::spl {

namespace {

constexpr std::uint64_t kMcdoStream = 0x5e1ec7;

bool asks_queries(RunMode mode) { return mode == RunMode::kArSpl || mode == RunMode::kNoSpl; }

bool alternates(RunMode mode) { return asks_queries(mode) || mode == RunMode::kNoAr; }

std::vector<GrayImage> train_images(const Dataset& data) {
  std::vector<GrayImage> out;
  out.reserve(data.train.size());
  for (const auto& t : data.train) out.push_back(t.image);
  return out;
}

double mean_val_dice(const segmodel::SegModel& model, const Dataset& data) {
  std::vector<MetricReport> reports(data.val.size());
  parallel_for(data.val.size(), [&](std::size_t i) {
    reports[i] = evaluate_mask(segmodel::predict_binary(model, data.val[i].image), data.val[i].truth);
  });
  return mean_metrics(reports).dice;
}

double mean_pseudo_dice(const std::vector<EvalImage>& images) {
  std::vector<MetricReport> reports;
  for (const auto& e : images) reports.push_back(evaluate_mask(e.pseudo_labels, e.truth));
  return mean_metrics(reports).dice;
}

void train_round(TrainState& s, const Dataset& data, const RunConfig& cfg, int steps) {
  const std::vector<GrayImage> images = train_images(data);
  std::vector<LabelGrid> labels;
  std::vector<std::vector<double>> weights;
  for (const auto& img : s.images) {
    labels.push_back(img.labels);
    weights.push_back(img.weights.v);
  }
  segmodel::TrainHyper hyper = cfg.hyper;
  hyper.max_steps = steps;
  hyper.lambda = cfg.spl.lambda;
  segmodel::TrainResult result = segmodel::train_weighted(s.model, images, labels, weights, hyper);
  s.model = std::move(result.model);
  s.step_grad_norms.insert(s.step_grad_norms.end(), result.grad_norm_history.begin(),
                           result.grad_norm_history.end());
  std::vector<double> gradient;
  segmodel::loss_and_gradient(s.model, images, labels, weights, hyper.lambda, &gradient);
  double sq = 0.0;
  for (double g : gradient) sq += g * g;
  s.final_grad_norm = std::sqrt(sq);
}

std::vector<suggest::QueryBatch> select_all_queries(const TrainState& s, const Dataset& data, const RunConfig& cfg) {
  const double eta_k = uncertainty::eta(s.k, cfg.theta);
  std::vector<suggest::QueryBatch> batches(data.train.size());
  parallel_for(data.train.size(), [&](std::size_t i) {
    const TrainingImage& t = data.train[i];
    const uncertainty::UncertaintyMap g = uncertainty::vesselness_uncertainty(t.vesselness);
    uncertainty::UncertaintyMap m{t.image.width, t.image.height, uncertainty::UncertaintyKind::kModel,
                                  std::vector<double>(t.image.data.size(), 0.0)};
    // With eta = 1 the model term is multiplied by zero, so MC dropout is skipped.
    if (eta_k < 1.0) {
      const std::uint64_t seed = derive_seed(s.model.seed, {kMcdoStream, static_cast<std::uint64_t>(s.k), i});
      m = uncertainty::model_uncertainty(segmodel::mcdo_expectation(s.model, t.image, cfg.mcdo_passes, seed),
                                         cfg.entropy);
    }
    const uncertainty::SuperpixelUncertainty u = uncertainty::fuse_mvu(m, g, eta_k, t.partition);
    batches[i] = suggest::select_queries(u, s.images[i].annotations.ids(), cfg.queries_per_image,
                                         static_cast<int>(i), s.k);
  });
  return batches;
}

void check_answers(const std::vector<suggest::QueryBatch>& pending, const std::vector<suggest::AnnotationSet>& sets) {
  if (sets.size() != pending.size()) {
    throw Error(ErrorCode::kInvalidArgument, "annotator returned " + std::to_string(sets.size()) +
                                                 " sets for " + std::to_string(pending.size()) + " batches");
  }
  for (std::size_t i = 0; i < sets.size(); ++i) {
    std::set<int> asked(pending[i].superpixels.begin(), pending[i].superpixels.end());
    std::set<int> answered;
    for (const auto& sp : sets[i].superpixels) answered.insert(sp.id);
    if (sets[i].image_id != pending[i].image_id || sets[i].iteration != pending[i].iteration || asked != answered ||
        answered.size() != sets[i].superpixels.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "annotations for image " + std::to_string(pending[i].image_id) + " do not match the query batch");
    }
  }
}

// Steps 4 and 5, then the stopping decision.
void finish_alternation(TrainState& s, const Dataset& data, const RunConfig& cfg) {
  if (cfg.spl.mode == RunMode::kNoSpl) {
    for (auto& img : s.images) {
      for (std::size_t p = 0; p < img.weights.v.size(); ++p) {
        img.weights.v[p] = img.weights.annotated[p] ? cfg.spl.omega : 0.0;
      }
    }
  } else {
    const PaceParams pace = pace_params(s.k, cfg.spl);
    parallel_for(s.images.size(), [&](std::size_t i) {
      ImageState& img = s.images[i];
      const segmodel::ProbMap prob = segmodel::predict_proba(s.model, data.train[i].image);
      img.weights.v = spld_assign(segmodel::pixel_cross_entropy(prob, img.labels), pace);
      restore_annotation_weights(img.weights, cfg.spl.omega);
    });
  }
  s.dice_history.push_back(mean_val_dice(s.model, data));
  const std::size_t n = s.dice_history.size();
  const bool plateau = n >= 2 && s.dice_history[n - 1] - s.dice_history[n - 2] < cfg.spl.stop_dice_increment;
  if (plateau || s.k >= cfg.spl.max_alt_iters) {
    s.stage = Stage::kDone;
  } else {
    ++s.k;
    s.stage = Stage::kTrain;
  }
}

void run_baseline(TrainState& s, const Dataset& data, const RunConfig& cfg) {
  if (cfg.spl.mode == RunMode::kBaselinePl) {
    s.dice_history.push_back(mean_pseudo_dice(data.val));
  } else {
    train_round(s, data, cfg, cfg.baseline_steps > 0 ? cfg.baseline_steps : cfg.hyper.max_steps);
    s.dice_history.push_back(mean_val_dice(s.model, data));
  }
  s.stage = Stage::kDone;
}

}  // namespace

void validate(const RunConfig& cfg) {
  validate(cfg.spl);
  segmodel::validate(cfg.hyper);
  if (cfg.initial_steps < 0) throw Error(ErrorCode::kInvalidArgument, "initial_steps must be >= 0");
  if (cfg.baseline_steps < 0) throw Error(ErrorCode::kInvalidArgument, "baseline_steps must be >= 0");
  if (cfg.queries_per_image < 0) throw Error(ErrorCode::kInvalidArgument, "queries_per_image must be >= 0");
  if (cfg.mcdo_passes < 1) throw Error(ErrorCode::kInvalidArgument, "mcdo_passes must be >= 1");
  if (!(cfg.theta > 0.0 && cfg.theta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "theta must lie in (0, 1]");
  if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dropout_rate must lie in [0, 1)");
  }
}

ConvergenceCheck check_convergence(const TrainState& state, std::size_t window) {
  ConvergenceCheck out;
  out.final_grad_norm = state.final_grad_norm;
  const auto& h = state.step_grad_norms;
  if (h.empty() || window == 0) return out;
  std::vector<double> tail(h.end() - static_cast<std::ptrdiff_t>(std::min(window, h.size())), h.end());
  std::sort(tail.begin(), tail.end());
  const std::size_t m = tail.size();
  out.trailing_median = m % 2 ? tail[m / 2] : 0.5 * (tail[m / 2 - 1] + tail[m / 2]);
  out.stable = out.final_grad_norm < 10.0 * out.trailing_median;
  return out;
}

TrainState initial_state(const Dataset& data, const RunConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  if (data.train.empty()) throw Error(ErrorCode::kInvalidArgument, "dataset has no training images");
  const RunMode mode = cfg.spl.mode;
  if (mode != RunMode::kBaselinePl && data.val.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "dataset has no validation images");
  }
  TrainState s;
  s.model = segmodel::init_model(seed, cfg.dropout_rate, cfg.widths);
  for (const auto& t : data.train) {
    ImageState img;
    if (mode == RunMode::kBaselineFs) {
      if (!t.truth) throw Error(ErrorCode::kMissingGroundTruth, "full supervision needs training ground truth");
      img.labels = *t.truth;
    } else {
      img.labels = t.pseudo_labels;
    }
    if (mode == RunMode::kArSpl || mode == RunMode::kNoAr) {
      img.weights = init_latent_weights(t.vesselness);
    } else {
      img.weights = {std::vector<double>(t.image.data.size(), 1.0), std::vector<std::uint8_t>(t.image.data.size(), 0)};
    }
    s.images.push_back(std::move(img));
  }
  return s;
}

RunResult arspl_run(const Dataset& data, const RunConfig& cfg, suggest::Annotator& annotator, std::uint64_t seed,
                    const TransitionHook& on_transition, std::optional<TrainState> resume) {
  validate(cfg);
  TrainState s;
  if (resume) {
    s = std::move(*resume);
    if (s.images.size() != data.train.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "resumed state does not match the dataset");
    }
  } else {
    s = initial_state(data, cfg, seed);
    if (on_transition) on_transition(s);
  }
  const auto notify = [&] {
    if (on_transition) on_transition(s);
  };

  if (!alternates(cfg.spl.mode) && s.stage != Stage::kDone) {
    run_baseline(s, data, cfg);
    notify();
  }

  while (s.stage != Stage::kDone) {
    if (s.stage == Stage::kTrain) {
      const bool first = s.k == 1 && cfg.initial_steps > 0;
      train_round(s, data, cfg, first ? cfg.initial_steps : cfg.hyper.max_steps);
      if (cfg.spl.mode != RunMode::kNoSpl) {
        parallel_for(s.images.size(), [&](std::size_t i) {
          s.images[i].labels = update_self_paced_labels(s.model, data.train[i].image, s.images[i].annotations,
                                                        data.train[i].partition);
        });
      }
      if (asks_queries(cfg.spl.mode) && cfg.queries_per_image > 0) {
        s.pending = select_all_queries(s, data, cfg);
        s.stage = Stage::kAwaitAnnotations;
      } else {
        finish_alternation(s, data, cfg);
      }
      notify();
      continue;
    }

    // Stage::kAwaitAnnotations
    std::vector<segmodel::ProbMap> predictions(data.train.size());
    parallel_for(data.train.size(),
                 [&](std::size_t i) { predictions[i] = segmodel::predict_proba(s.model, data.train[i].image); });
    std::vector<suggest::QueryRequest> requests;
    for (std::size_t i = 0; i < s.pending.size(); ++i) {
      requests.push_back({s.pending[i], &data.train[i].image, &data.train[i].partition, &predictions[i]});
    }
    std::vector<suggest::AnnotationSet> answers;
    try {
      answers = annotator.annotate(requests);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAnnotatorAborted) throw;
      return {false, std::move(s), {}};
    }
    check_answers(s.pending, answers);
    for (std::size_t i = 0; i < answers.size(); ++i) {
      apply_refinement(s.images[i], data.train[i].partition, answers[i], cfg.spl.omega);
    }
    s.pending.clear();
    finish_alternation(s, data, cfg);
    notify();
  }

  RunReport report = make_report(data, cfg, s);
  return {true, std::move(s), std::move(report)};
}

RunReport make_report(const Dataset& data, const RunConfig& cfg, const TrainState& state) {
  RunReport r;
  r.mode = mode_name(cfg.spl.mode);
  r.iterations = cfg.spl.mode == RunMode::kBaselinePl ? 0 : state.k;
  r.dice_history = state.dice_history;
  std::int64_t annotated_pixels = 0;
  std::int64_t total_pixels = 0;
  for (std::size_t i = 0; i < state.images.size(); ++i) {
    r.annotated_superpixels += static_cast<int>(state.images[i].annotations.size());
    for (const auto& [id, labels] : state.images[i].annotations.labeled) {
      annotated_pixels += static_cast<std::int64_t>(labels.size());
    }
    total_pixels += static_cast<std::int64_t>(data.train[i].image.data.size());
  }
  r.annotated_pixel_fraction =
      total_pixels > 0 ? static_cast<double>(annotated_pixels) / static_cast<double>(total_pixels) : 0.0;
  std::vector<MetricReport> reports(data.test.size());
  if (cfg.spl.mode == RunMode::kBaselinePl) {
    for (std::size_t i = 0; i < data.test.size(); ++i) {
      reports[i] = evaluate_mask(data.test[i].pseudo_labels, data.test[i].truth);
    }
  } else {
    parallel_for(data.test.size(), [&](std::size_t i) {
      reports[i] = evaluate_mask(segmodel::predict_binary(state.model, data.test[i].image), data.test[i].truth);
    });
    r.convergence = check_convergence(state);
  }
  r.test_metrics = mean_metrics(reports);
  return r;
}

}  // namespace arspl::spl
