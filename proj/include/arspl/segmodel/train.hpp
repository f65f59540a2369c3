#pragma once

#include <span>
#include <vector>

#include "arspl/core/image.hpp"
#include "arspl/segmodel/model.hpp"

namespace arspl::segmodel {

struct TrainHyper {
  double lr0 = 0.01;
  double momentum = 0.9;
  int batch = 16;
  int max_steps = 5000;
  double lr_power = 0.9;
  double lambda = 1e-4;
};

void validate(const TrainHyper& hyper);

struct TrainResult {
  SegModel model;
  std::vector<double> loss_history;      // objective per step, before the update
  std::vector<double> grad_norm_history;  // ||gradient|| per step
};

// Objective: (1/P) sum_j v_j CE(y_j, p_j) + (lambda/2) ||W||^2 over conv
// weights, with P the pixel count of the batch.
//
// SGD with momentum (accum = m * accum + g; W -= lr * accum) for max_steps
// steps, lr = lr0 * (1 - step / max_steps)^lr_power. Mini-batches and dropout
// masks derive from (model.seed, model.step_count), so a run is a pure
// function of its inputs. Throws Error(kTrainingDiverged) on a non-finite
// loss.
TrainResult train_weighted(const SegModel& model, std::span<const GrayImage> images,
                           std::span<const LabelGrid> labels,
                           std::span<const std::vector<double>> weights, const TrainHyper& hyper);

// Objective value and flattened gradient over the full set (dropout off).
double loss_and_gradient(const SegModel& model, std::span<const GrayImage> images,
                         std::span<const LabelGrid> labels,
                         std::span<const std::vector<double>> weights, double lambda,
                         std::vector<double>* gradient);

}  // namespace arspl::segmodel
