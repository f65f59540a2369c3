#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <limits>

#include "arspl/core/error.hpp"
#include "arspl/core/rng.hpp"
#include "arspl/layersep/morphology.hpp"
#include "arspl/layersep/pseudo_label.hpp"
#include "arspl/layersep/rpca.hpp"
#include "arspl/layersep/vesselness.hpp"
#include "arspl/synth/synth.hpp"
#include "support/oracles.hpp"
#include "support/planted_rpca.hpp"

using namespace arspl;
using namespace arspl::layersep;

namespace {

// Exhaustive max (or min) over the disk neighbourhood.
GrayImage brute_disk(const GrayImage& img, int diameter, bool take_max) {
  const double r = diameter / 2.0;
  const int reach = static_cast<int>(r) + 1;
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double best = take_max ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
      for (int dy = -reach; dy <= reach; ++dy) {
        for (int dx = -reach; dx <= reach; ++dx) {
          if (dx * dx + dy * dy > r * r) continue;
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= img.width || yy >= img.height) continue;
          best = take_max ? std::max(best, img.at(xx, yy)) : std::min(best, img.at(xx, yy));
        }
      }
      out.at(x, y) = best;
    }
  }
  return out;
}

GrayImage brute_close(const GrayImage& img, int diameter) {
  return brute_disk(brute_disk(img, diameter, true), diameter, false);
}

GrayImage line_image() {
  GrayImage img(48, 48, 0.8);
  for (int y = 0; y < 48; ++y) {
    for (int x = 22; x < 25; ++x) img.at(x, y) = 0.2;
  }
  return img;
}

}  // namespace

TEST_CASE("closing is the identity on constants") {
  const GrayImage flat(30, 20, 0.37);
  CHECK(close_disk(flat, 20) == flat);
  const GraySequence seq({flat, flat}, 0);
  for (const GrayImage& f : difference_sequence(seq, 20).frames) {
    for (double v : f.data) CHECK(v == 0.0);
  }
}

TEST_CASE("morphology matches the exhaustive disk oracle") {
  Rng rng(3);
  for (int diameter : {1, 3, 4, 7, 20}) {
    GrayImage img(25, 23);
    for (double& v : img.data) v = rng.uniform();
    CHECK(dilate_disk(img, diameter) == brute_disk(img, diameter, true));
    CHECK(erode_disk(img, diameter) == brute_disk(img, diameter, false));
    CHECK(close_disk(img, diameter) == brute_close(img, diameter));
  }
}

TEST_CASE("thin dark line becomes a ridge in the difference image") {
  const GrayImage img = line_image();
  const GraySequence diff = difference_sequence(GraySequence({img}, 0), 20);
  const GrayImage expect = brute_close(img, 20);
  for (int y = 0; y < 48; ++y) {
    CHECK(diff.frames[0].at(23, y) == doctest::Approx(expect.at(23, y) - 0.2));
    CHECK(diff.frames[0].at(23, y) == doctest::Approx(0.6));
    CHECK(diff.frames[0].at(5, y) == doctest::Approx(0.0));
  }
}

TEST_CASE("wide dark blob survives the closing") {
  GrayImage img(64, 64, 0.8);
  for (int y = 16; y < 48; ++y) {
    for (int x = 16; x < 48; ++x) img.at(x, y) = 0.2;
  }
  const GraySequence diff = difference_sequence(GraySequence({img}, 0), 20);
  const GrayImage expect = brute_close(img, 20);
  for (int y = 20; y < 44; ++y) {
    for (int x = 20; x < 44; ++x) {
      CHECK(diff.frames[0].at(x, y) == doctest::Approx(expect.at(x, y) - img.at(x, y)));
      CHECK(diff.frames[0].at(x, y) == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("difference images are non-negative") {
  synth::SynthConfig c;
  c.seed = 17;
  c.n_frames = 4;
  for (const GrayImage& f : difference_sequence(synth::generate_sequence(c).sequence, 20).frames) {
    CHECK(*std::min_element(f.data.begin(), f.data.end()) >= 0.0);
  }
}

TEST_CASE("oversized disks are rejected") {
  const GraySequence seq({GrayImage(10, 10, 0.5)}, 0);
  CHECK_THROWS_AS(difference_sequence(seq, 40), Error);
  CHECK_THROWS_AS(difference_sequence(seq, 0), Error);
}

TEST_CASE("RPCA of zero is zero in one iteration") {
  const LayerPair p = rpca_ialm(Eigen::MatrixXd::Zero(16, 5), default_rpca_config(16));
  CHECK(p.iterations == 1);
  CHECK(p.converged);
  CHECK(p.low_rank.norm() == 0.0);
  CHECK(p.sparse.norm() == 0.0);
}

TEST_CASE("RPCA keeps a pure rank-one matrix in the low-rank layer") {
  Rng rng(8);
  Eigen::VectorXd u(400), v(20);
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.uniform(0.2, 1.0);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(0.5, 1.5);
  const Eigen::MatrixXd d = u * v.transpose();
  const LayerPair p = rpca_ialm(d, default_rpca_config(d.rows()));
  CHECK(p.converged);
  CHECK(p.sparse.norm() <= 1e-3 * d.norm());
  CHECK((p.low_rank - d).norm() <= 1e-3 * d.norm());
}

TEST_CASE("RPCA recovers a planted low-rank plus sparse decomposition") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const testing::PlantedRpca planted = testing::make_planted_rpca(seed);
    RpcaConfig cfg;
    cfg.xi = testing::planted_xi(planted);
    const LayerPair p = rpca_ialm(planted.d, cfg);
    CAPTURE(seed);
    CHECK(p.converged);
    CHECK(p.iterations <= 500);
    CHECK((p.low_rank - planted.low_rank).norm() / planted.low_rank.norm() <= 1e-3);
    // Conservation: the layers reconstruct the input within tol.
    CHECK((planted.d - p.low_rank - p.sparse).norm() <= 1e-6 * planted.d.norm() * (1 + 1e-9));
    // The constraint residual oscillates step to step, but its maximum over
    // consecutive windows of 5 iterations strictly decreases.
    const auto& h = p.residual_history;
    REQUIRE(h.size() >= 10);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t start = 0; start + 5 <= h.size(); start += 5) {
      const double peak = *std::max_element(h.begin() + start, h.begin() + start + 5);
      CHECK(peak < previous);
      previous = peak;
    }
  }
}

TEST_CASE("RPCA reports non-convergence and rejects bad configs") {
  const testing::PlantedRpca planted = testing::make_planted_rpca(4);
  RpcaConfig cfg;
  cfg.xi = testing::planted_xi(planted);
  cfg.max_iter = 2;
  const LayerPair p = rpca_ialm(planted.d, cfg);
  CHECK_FALSE(p.converged);
  CHECK(p.iterations == 2);
  CHECK(p.residual > cfg.tol);
  RpcaConfig bad = cfg;
  bad.xi = 0.0;
  CHECK_THROWS_AS(rpca_ialm(planted.d, bad), Error);
  bad = cfg;
  bad.rho = 1.0;
  CHECK_THROWS_AS(rpca_ialm(planted.d, bad), Error);
  bad = cfg;
  bad.max_iter = 0;
  CHECK_THROWS_AS(rpca_ialm(planted.d, bad), Error);
}

TEST_CASE("SVD singular values match a symmetric eigensolver on tiny matrices") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(5)), n = 2 + static_cast<int>(rng.below(4));
    Eigen::MatrixXd a(m, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(a).singularValues();
    Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a.transpose() * a).eigenvalues();
    std::vector<double> gram(ev.data(), ev.data() + ev.size());
    std::sort(gram.rbegin(), gram.rend());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      CHECK(sv(i) * sv(i) == doctest::Approx(gram[i]).epsilon(1e-8).scale(sv(0) * sv(0)));
    }
  }
}

TEST_CASE("vesselness normalizes the positive part of the key-frame column") {
  LayerPair p;
  p.sparse = Eigen::MatrixXd::Zero(3, 2);
  p.sparse.col(1) << 0.1, 0.4, -0.2;
  const VesselnessMap m = vesselness_from_layer(p, 1, 3, 1);
  CHECK(m.values[0] == doctest::Approx(0.25));
  CHECK(m.values[1] == 1.0);
  CHECK(m.values[2] == 0.0);

  p.sparse.col(0) << -0.1, 0.0, -0.3;
  for (double v : vesselness_from_layer(p, 0, 3, 1).values) CHECK(v == 0.0);

  p.sparse.col(0) << 0.0, 0.5, 0.2;
  CHECK(vesselness_from_layer(p, 0, 3, 1).values[1] == 1.0);
  CHECK_THROWS_AS(vesselness_from_layer(p, 2, 3, 1), Error);
  CHECK_THROWS_AS(vesselness_from_layer(p, 0, 2, 2), Error);
}

TEST_CASE("Otsu examples") {
  SUBCASE("two populations") {
    VesselnessMap m{10, 10, std::vector<double>(100, 0.1)};
    for (int i = 0; i < 10; ++i) m.values[i * 7] = 0.9;
    const OtsuResult r = otsu_threshold(m);
    CHECK_FALSE(r.degenerate);
    for (std::size_t i = 0; i < 100; ++i) CHECK(r.labels.labels[i] == (m.values[i] == 0.9 ? 1 : 0));
    CHECK(r.labels == testing::brute_otsu(m).labels);
  }
  SUBCASE("constant map is degenerate") {
    const OtsuResult r = otsu_threshold(VesselnessMap{4, 4, std::vector<double>(16, 0.3)});
    CHECK(r.degenerate);
    CHECK(r.labels.foreground_count() == 0);
  }
  SUBCASE("two points") {
    const OtsuResult r = otsu_threshold(VesselnessMap{2, 1, {0.0, 1.0}});
    CHECK(r.labels.labels == std::vector<std::uint8_t>{0, 1});
  }
}

TEST_CASE("Otsu equals exhaustive threshold search") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const VesselnessMap m = testing::random_vesselness_map(rng, 1 + static_cast<int>(rng.below(40)), 1 + static_cast<int>(rng.below(40)));
    const OtsuResult got = otsu_threshold(m);
    const OtsuResult want = testing::brute_otsu(m);
    CAPTURE(trial);
    CHECK(got.degenerate == want.degenerate);
    CHECK(got.threshold == want.threshold);
    CHECK(got.labels == want.labels);
  }
}

TEST_CASE("pseudo labels find the vessels of a synthetic sequence") {
  synth::SynthConfig c;
  c.seed = 2024;
  const synth::SynthSample s = synth::generate_sequence(c);
  const PseudoLabel pl = generate_pseudo_label(s.sequence);
  CHECK(pl.rpca_converged);
  CHECK_FALSE(pl.otsu_degenerate);
  CHECK(*std::max_element(pl.vesselness.values.begin(), pl.vesselness.values.end()) == 1.0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pl.labels.size(); ++i) hits += pl.labels.labels[i] && s.truth.labels[i];
  // Most predicted foreground lies on true vessels.
  CHECK(static_cast<double>(hits) >= 0.7 * static_cast<double>(pl.labels.foreground_count()));
}
