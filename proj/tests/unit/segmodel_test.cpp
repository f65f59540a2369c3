#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "arspl/core/error.hpp"
#include "arspl/core/metrics.hpp"
#include "arspl/core/parallel.hpp"
#include "arspl/core/rng.hpp"
#include "arspl/segmodel/checkpoint.hpp"
#include "arspl/segmodel/model.hpp"
#include "arspl/segmodel/predict.hpp"
#include "arspl/segmodel/train.hpp"
#include "support/oracles.hpp"

using namespace arspl;
using namespace arspl::segmodel;

namespace {

GrayImage random_image(Rng& rng, int w, int h) {
  GrayImage img(w, h);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

LabelGrid random_labels(Rng& rng, int w, int h) {
  LabelGrid g(w, h);
  for (auto& v : g.labels) v = rng.uniform() < 0.3;
  return g;
}

// Bright field with a dark cross; labels mark the cross.
void cross_pair(GrayImage& img, LabelGrid& labels) {
  img = GrayImage(16, 16, 0.8);
  labels = LabelGrid(16, 16);
  for (int i = 0; i < 16; ++i) {
    for (int t = 7; t <= 8; ++t) {
      img.at(i, t) = 0.25;
      img.at(t, i) = 0.25;
      labels.labels[t * 16 + i] = 1;
      labels.labels[i * 16 + t] = 1;
    }
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace

TEST_CASE("initialization is seeded") {
  CHECK(init_model(5) == init_model(5));
  CHECK_FALSE(flat_parameters(init_model(5)) == flat_parameters(init_model(6)));
  const SegModel m = init_model(1, 0.2, {4, 6, 8});
  CHECK(parameter_count(m) == flat_parameters(m).size());
  for (double v : flat_parameters(m)) CHECK(std::isfinite(v));
}

TEST_CASE("fresh models predict near one half on average") {
  Rng rng(12);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ProbMap p = predict_proba(init_model(seed), random_image(rng, 32, 32));
    const double mean = std::accumulate(p.values.begin(), p.values.end(), 0.0) / p.values.size();
    CHECK(std::abs(mean - 0.5) < 0.2);
  }
}

TEST_CASE("prediction is deterministic and keeps the input size") {
  Rng rng(4);
  const SegModel m = init_model(3);
  for (auto [w, h] : {std::pair{16, 16}, std::pair{18, 14}, std::pair{7, 9}}) {
    const GrayImage img = random_image(rng, w, h);
    const ProbMap a = predict_proba(m, img);
    CHECK(a.width == w);
    CHECK(a.height == h);
    CHECK(a == predict_proba(m, img));
    for (double v : a.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("binarization threshold and tie rule") {
  const ProbMap p{4, 1, {0.7, 0.3, 0.5, 0.4999999}};
  CHECK(binarize(p).labels == std::vector<std::uint8_t>{1, 0, 1, 0});
}

TEST_CASE("binarization is the per-pixel cross-entropy minimizer") {
  Rng rng(30);
  for (int trial = 0; trial < 20; ++trial) {
    ProbMap p{9, 7, std::vector<double>(63)};
    for (double& v : p.values) v = rng.uniform();
    const LabelGrid got = binarize(p);
    const std::vector<double> ce0 = pixel_cross_entropy(p, LabelGrid(9, 7, 0));
    const std::vector<double> ce1 = pixel_cross_entropy(p, LabelGrid(9, 7, 1));
    for (std::size_t i = 0; i < 63; ++i) CHECK(got.labels[i] == (ce1[i] <= ce0[i] ? 1 : 0));
  }
}

TEST_CASE("cross-entropy clamps probabilities") {
  const ProbMap p{2, 1, {0.0, 1.0}};
  const std::vector<double> ce = pixel_cross_entropy(p, LabelGrid(2, 1, 1));
  CHECK(ce[0] == doctest::Approx(-std::log(1e-12)));
  CHECK(ce[1] == 0.0);
}

TEST_CASE("analytic gradient matches central differences") {
  const std::vector<testing::GradientProbe> probes = testing::probe_gradient(77, 20);
  REQUIRE(probes.size() == 20);
  for (const auto& p : probes) {
    CAPTURE(p.finite_difference);
    CAPTURE(p.analytic);
    CHECK(p.relative_error() <= 1e-4);
  }
}

TEST_CASE("data-term gradient is linear in the weights") {
  Rng rng(5);
  const SegModel m = init_model(2, 0.0);
  const std::vector<GrayImage> images{random_image(rng, 16, 16)};
  const std::vector<LabelGrid> labels{random_labels(rng, 16, 16)};
  std::vector<std::vector<double>> w1(1, std::vector<double>(256)), w2 = w1;
  for (std::size_t i = 0; i < 256; ++i) {
    w1[0][i] = rng.uniform();
    w2[0][i] = 2 * w1[0][i];
  }
  std::vector<double> g1, g2;
  const double l1 = loss_and_gradient(m, images, labels, w1, 0.0, &g1);
  const double l2 = loss_and_gradient(m, images, labels, w2, 0.0, &g2);
  CHECK(l2 == doctest::Approx(2 * l1).epsilon(1e-12));
  std::vector<double> diff(g1.size());
  for (std::size_t i = 0; i < g1.size(); ++i) diff[i] = g2[i] - 2 * g1[i];
  CHECK(norm(diff) < 1e-6 * 2 * norm(g1));
}

TEST_CASE("zero weights and zero decay leave parameters unchanged") {
  Rng rng(6);
  const SegModel m = init_model(4);
  const std::vector<GrayImage> images{random_image(rng, 16, 16), random_image(rng, 16, 16)};
  const std::vector<LabelGrid> labels{random_labels(rng, 16, 16), random_labels(rng, 16, 16)};
  const std::vector<std::vector<double>> weights(2, std::vector<double>(256, 0.0));
  TrainHyper hyper;
  hyper.max_steps = 20;
  hyper.batch = 2;
  hyper.lambda = 0.0;
  const TrainResult r = train_weighted(m, images, labels, weights, hyper);
  CHECK(r.model.params == m.params);
  CHECK(r.model.step_count == 20);
}

TEST_CASE("overfitting a single image") {
  GrayImage img;
  LabelGrid labels;
  cross_pair(img, labels);
  const std::vector<GrayImage> images{img};
  const std::vector<LabelGrid> ys{labels};
  const std::vector<std::vector<double>> weights(1, std::vector<double>(256, 1.0));
  TrainHyper hyper;
  hyper.max_steps = 500;
  hyper.batch = 1;
  const TrainResult r = train_weighted(init_model(1), images, ys, weights, hyper);
  REQUIRE(r.loss_history.size() == 500);
  const ProbMap before = predict_proba(init_model(1), img);
  const ProbMap after = predict_proba(r.model, img);
  auto mean_ce = [&](const ProbMap& p) {
    const std::vector<double> ce = pixel_cross_entropy(p, labels);
    return std::accumulate(ce.begin(), ce.end(), 0.0) / ce.size();
  };
  CHECK(mean_ce(after) <= 0.5 * mean_ce(before));
  CHECK(evaluate_mask(binarize(after), labels).dice >= 0.95);
  // Same inputs, same trajectory.
  CHECK(train_weighted(init_model(1), images, ys, weights, hyper).model == r.model);
}

TEST_CASE("training rejects invalid hyperparameters and inputs") {
  TrainHyper h;
  h.batch = 0;
  CHECK_THROWS_AS(validate(h), Error);
  h = {};
  h.lr0 = -1.0;
  CHECK_THROWS_AS(validate(h), Error);
  Rng rng(1);
  const std::vector<GrayImage> images{random_image(rng, 8, 8)};
  const std::vector<LabelGrid> labels{random_labels(rng, 8, 8)};
  const std::vector<std::vector<double>> negative(1, std::vector<double>(64, -1.0));
  CHECK_THROWS_AS(train_weighted(init_model(1), images, labels, negative, TrainHyper{}), Error);
}

TEST_CASE("MC-dropout expectation") {
  Rng rng(8);
  const GrayImage img = random_image(rng, 16, 16);
  SUBCASE("values are multiples of one over the pass count") {
    const ExpectationMap e = mcdo_expectation(init_model(3, 0.5), img, 20, 99);
    CHECK(e.passes == 20);
    for (double v : e.values) CHECK(std::abs(v * 20 - std::round(v * 20)) < 1e-12);
  }
  SUBCASE("no dropout reproduces the binary prediction") {
    const SegModel m = init_model(3, 0.0);
    const ExpectationMap e = mcdo_expectation(m, img, 7, 1);
    const LabelGrid b = predict_binary(m, img);
    for (std::size_t i = 0; i < e.values.size(); ++i) CHECK(e.values[i] == b.labels[i]);
  }
  SUBCASE("seeded and independent of worker count") {
    const SegModel m = init_model(3, 0.3);
    set_worker_count(1);
    const ExpectationMap a = mcdo_expectation(m, img, 12, 42);
    set_worker_count(3);
    const ExpectationMap b = mcdo_expectation(m, img, 12, 42);
    set_worker_count(0);
    CHECK(a == b);
    CHECK_FALSE(mcdo_expectation(m, img, 12, 43) == a);
  }
  SUBCASE("at least one pass") { CHECK_THROWS_AS(mcdo_expectation(init_model(1), img, 0, 1), Error); }
}

TEST_CASE("checkpoints round trip") {
  SegModel m = init_model(11, 0.3, {4, 6, 8});
  m.step_count = 123;
  CHECK(decode_checkpoint(encode_checkpoint(m)) == m);
  const auto path = std::filesystem::temp_directory_path() / "arspl_model.ckpt";
  save_checkpoint(m, path);
  CHECK(load_checkpoint(path) == m);

  std::string bytes = encode_checkpoint(m);
  try {
    decode_checkpoint("NOTACKPT" + bytes.substr(8));
    FAIL("bad magic accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCheckpointFormat);
  }
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 8)), Error);
}
