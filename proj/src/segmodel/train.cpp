#include "arspl/segmodel/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "arspl/core/error.hpp"
#include "arspl/core/parallel.hpp"
#include "arspl/core/rng.hpp"
#include "network.hpp"

namespace arspl::segmodel {

namespace {

struct Sample {
  detail::PaddedImage padded;
  std::vector<std::uint8_t> labels;  // padded layout
  std::vector<double> weights;       // padded layout; zero in the padding
};

Sample make_sample(const GrayImage& image, const LabelGrid& labels, const std::vector<double>& weights) {
  require_same_shape(image.width, image.height, labels.width, labels.height, "training labels");
  if (weights.size() != image.data.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "weight map size does not match the image");
  }
  Sample s{detail::pad_to_multiple_of_4(image), {}, {}};
  const int pw = s.padded.image.width;
  s.labels.assign(s.padded.image.data.size(), 0);
  s.weights.assign(s.padded.image.data.size(), 0.0);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::size_t src = static_cast<std::size_t>(y) * image.width + x;
      const std::size_t dst = static_cast<std::size_t>(y) * pw + x;
      if (weights[src] < 0.0) throw Error(ErrorCode::kInvalidArgument, "pixel weights must be >= 0");
      s.labels[dst] = labels.labels[src];
      s.weights[dst] = weights[src];
    }
  }
  return s;
}

// Weighted data term of one image (sum, not yet normalized) and its gradient.
double image_loss_and_grad(const SegModel& model, const Sample& s, double scale, const detail::DropoutSpec& dropout,
                           detail::ForwardCache& cache, std::vector<std::vector<double>>& grads) {
  const detail::RowMat probs = detail::forward(model, s.padded.image, dropout, &cache);
  detail::RowMat dlogits(2, probs.cols());
  double loss = 0.0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    const double v = s.weights[j];
    const int y = s.labels[j];
    if (v != 0.0) loss += v * -std::log(std::max(probs(y, j), 1e-300));
    dlogits(0, j) = v * scale * (probs(0, j) - (y == 0 ? 1.0 : 0.0));
    dlogits(1, j) = v * scale * (probs(1, j) - (y == 1 ? 1.0 : 0.0));
  }
  detail::backward(model, cache, dlogits, grads);
  return loss;
}

double weight_decay_term(const SegModel& model, double lambda, std::vector<std::vector<double>>* grads) {
  if (lambda == 0.0) return 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    if (model.params[i].shape.size() != 4) continue;
    const auto& w = model.params[i].values;
    for (std::size_t j = 0; j < w.size(); ++j) {
      sq += w[j] * w[j];
      if (grads) (*grads)[i][j] += lambda * w[j];
    }
  }
  return 0.5 * lambda * sq;
}

void check_inputs(std::span<const GrayImage> images, std::span<const LabelGrid> labels,
                  std::span<const std::vector<double>> weights) {
  if (images.empty()) throw Error(ErrorCode::kInvalidArgument, "no training images");
  if (labels.size() != images.size() || weights.size() != images.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "images, labels and weights differ in count");
  }
}

}  // namespace

void validate(const TrainHyper& h) {
  if (!(h.lr0 > 0.0) || !(h.momentum >= 0.0) || h.batch < 1 || h.max_steps < 1 || !(h.lr_power > 0.0) ||
      !(h.lambda >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid training hyperparameters");
  }
}

double loss_and_gradient(const SegModel& model, std::span<const GrayImage> images, std::span<const LabelGrid> labels,
                         std::span<const std::vector<double>> weights, double lambda, std::vector<double>* gradient) {
  check_inputs(images, labels, weights);
  std::size_t pixels = 0;
  for (const auto& im : images) pixels += im.data.size();
  const double scale = 1.0 / static_cast<double>(pixels);
  auto grads = detail::zero_gradients(model);
  detail::ForwardCache cache;
  double loss = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    loss += image_loss_and_grad(model, make_sample(images[i], labels[i], weights[i]), scale, {}, cache, grads);
  }
  loss *= scale;
  loss += weight_decay_term(model, lambda, &grads);
  if (gradient) {
    gradient->clear();
    for (const auto& g : grads) gradient->insert(gradient->end(), g.begin(), g.end());
  }
  return loss;
}

TrainResult train_weighted(const SegModel& initial, std::span<const GrayImage> images,
                           std::span<const LabelGrid> labels, std::span<const std::vector<double>> weights,
                           const TrainHyper& hyper) {
  validate(hyper);
  check_inputs(images, labels, weights);
  std::vector<Sample> samples;
  samples.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) samples.push_back(make_sample(images[i], labels[i], weights[i]));

  TrainResult result{initial, {}, {}};
  SegModel& model = result.model;
  auto accum = detail::zero_gradients(model);
  const std::size_t batch = std::min<std::size_t>(hyper.batch, samples.size());
  std::vector<std::size_t> order(samples.size());
  std::vector<detail::ForwardCache> caches(batch);
  std::vector<std::vector<std::vector<double>>> per_image(batch, detail::zero_gradients(model));
  auto grads = detail::zero_gradients(model);

  for (int step = 0; step < hyper.max_steps; ++step) {
    const std::uint64_t global_step = static_cast<std::uint64_t>(model.step_count);
    // Batch: the first `batch` entries of a seeded partial Fisher-Yates shuffle.
    std::iota(order.begin(), order.end(), 0);
    Rng batch_rng(derive_seed(model.seed, {0xba7c, global_step}));
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t j = i + batch_rng.below(order.size() - i);
      std::swap(order[i], order[j]);
    }

    std::size_t pixels = 0;
    for (std::size_t b = 0; b < batch; ++b) pixels += images[order[b]].data.size();
    const double scale = 1.0 / static_cast<double>(pixels);

    std::vector<double> losses(batch, 0.0);
    parallel_for(batch, [&](std::size_t b) {
      for (auto& g : per_image[b]) std::fill(g.begin(), g.end(), 0.0);
      const detail::DropoutSpec dropout{true, derive_seed(model.seed, {0xd40f, global_step, b})};
      losses[b] = image_loss_and_grad(model, samples[order[b]], scale, dropout, caches[b], per_image[b]);
    });

    for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      loss += losses[b];
      for (std::size_t p = 0; p < grads.size(); ++p) {
        for (std::size_t j = 0; j < grads[p].size(); ++j) grads[p][j] += per_image[b][p][j];
      }
    }
    loss = loss * scale + weight_decay_term(model, hyper.lambda, &grads);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "non-finite training loss at step " << step << " (global step " << global_step << ", lr0 "
          << hyper.lr0 << ")";
      throw Error(ErrorCode::kTrainingDiverged, msg.str());
    }

    double norm2 = 0.0;
    for (const auto& g : grads) {
      for (double v : g) norm2 += v * v;
    }
    result.loss_history.push_back(loss);
    result.grad_norm_history.push_back(std::sqrt(norm2));

    const double lr = hyper.lr0 * std::pow(1.0 - static_cast<double>(step) / hyper.max_steps, hyper.lr_power);
    for (std::size_t p = 0; p < model.params.size(); ++p) {
      auto& values = model.params[p].values;
      for (std::size_t j = 0; j < values.size(); ++j) {
        accum[p][j] = hyper.momentum * accum[p][j] + grads[p][j];
        values[j] -= lr * accum[p][j];
      }
    }
    ++model.step_count;
  }
  return result;
}

}  // namespace arspl::segmodel
