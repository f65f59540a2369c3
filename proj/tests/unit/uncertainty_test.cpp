#include <doctest.h>

#include <cmath>

#include "arspl/core/error.hpp"
#include "arspl/core/rng.hpp"
#include "arspl/segmodel/model.hpp"
#include "arspl/segmodel/predict.hpp"
#include "arspl/superpixel/slic.hpp"
#include "arspl/uncertainty/uncertainty.hpp"

using namespace arspl;
using namespace arspl::uncertainty;

namespace {

segmodel::ExpectationMap expectation(std::vector<double> values, int passes = 20) {
  return {static_cast<int>(values.size()), 1, passes, std::move(values)};
}

layersep::VesselnessMap vesselness(std::vector<double> values) {
  return {static_cast<int>(values.size()), 1, std::move(values)};
}

UncertaintyMap map_of(std::vector<double> values, UncertaintyKind kind) {
  return {static_cast<int>(values.size()), 1, kind, std::move(values)};
}

void check_range(const UncertaintyMap& m) {
  double peak = 0.0;
  for (double v : m.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    peak = std::max(peak, v);
  }
  CHECK((peak == 1.0 || peak == 0.0));
}

}  // namespace

TEST_CASE("model uncertainty examples") {
  for (double v : model_uncertainty(expectation({0.0, 1.0, 1.0, 0.0})).values) CHECK(v == 0.0);
  const UncertaintyMap m = model_uncertainty(expectation({0.75, 0.5, 1.0}));
  CHECK(-0.75 * std::log(0.75) == doctest::Approx(0.2158).epsilon(1e-4));
  CHECK(-0.5 * std::log(0.5) == doctest::Approx(0.3466).epsilon(1e-4));
  CHECK(m.values[0] == doctest::Approx(0.6225).epsilon(1e-4));
  CHECK(m.values[1] == 1.0);
  CHECK(m.values[2] == 0.0);
  const UncertaintyMap full = model_uncertainty(expectation({0.75, 0.5, 1.0}), EntropyForm::kBinary);
  CHECK(full.values[1] == 1.0);
  CHECK(full.values[0] == doctest::Approx(0.8113).epsilon(1e-4));
}

TEST_CASE("vesselness uncertainty examples") {
  for (double v : vesselness_uncertainty(vesselness({0.0, 1.0, 1.0})).values) CHECK(v == 0.0);
  const UncertaintyMap g = vesselness_uncertainty(vesselness({0.5, 0.9, 0.0}));
  CHECK(g.values[0] == 1.0);
  CHECK(g.values[1] == doctest::Approx(0.36));
  CHECK(g.values[2] == 0.0);
}

TEST_CASE("uncertainty maps stay in the unit interval") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(60));
    const int passes = 1 + static_cast<int>(rng.below(25));
    std::vector<double> e(n), s(n);
    for (double& v : e) v = static_cast<double>(rng.below(passes + 1)) / passes;
    for (double& v : s) v = rng.uniform();
    check_range(model_uncertainty(expectation(e, passes)));
    check_range(model_uncertainty(expectation(e, passes), EntropyForm::kBinary));
    check_range(vesselness_uncertainty(vesselness(s)));
  }
}

TEST_CASE("vesselness uncertainty peaks exactly at one half") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s{0.5};
    for (int i = 0; i < 20; ++i) {
      double v = rng.uniform();
      if (v == 0.5) v = 0.25;
      s.push_back(v);
    }
    const UncertaintyMap g = vesselness_uncertainty(vesselness(s));
    CHECK(g.values[0] == 1.0);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(g.values[i] < 1.0);
  }
}

TEST_CASE("model uncertainty does not depend on the log base") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> e(30);
    for (double& v : e) v = static_cast<double>(rng.below(21)) / 20.0;
    for (EntropyForm form : {EntropyForm::kSingleTerm, EntropyForm::kBinary}) {
      const UncertaintyMap natural = model_uncertainty(expectation(e), form);
      for (double base : {2.0, 10.0, 3.7}) {
        const UncertaintyMap other = model_uncertainty(expectation(e), form, base);
        for (std::size_t i = 0; i < e.size(); ++i) CHECK(std::abs(other.values[i] - natural.values[i]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("model uncertainty vanishes without dropout") {
  Rng rng(4);
  GrayImage img(16, 16);
  for (double& v : img.data) v = rng.uniform();
  const segmodel::SegModel m = segmodel::init_model(2, 0.0);
  for (double v : model_uncertainty(segmodel::mcdo_expectation(m, img, 20, 7)).values) CHECK(v == 0.0);
}

TEST_CASE("eta schedule") {
  CHECK(eta(1, 0.4) == 1.0);
  CHECK(eta(2, 0.4) == 0.6);
  CHECK(eta(3, 0.4) == 0.2);
  CHECK(eta(4, 0.4) == 0.0);
  CHECK(eta(9, 0.4) == 0.0);
  for (double theta : {0.1, 0.3, 0.4, 0.7, 1.0}) {
    CHECK(eta(1, theta) == 1.0);
    double prev = 1.0;
    for (int k = 1; k < 30; ++k) {
      const double e = eta(k, theta);
      CHECK(e <= prev);
      CHECK(e >= 0.0);
      prev = e;
    }
    const int zero_at = static_cast<int>(std::ceil(1.0 + 1.0 / theta - 1e-12));
    CHECK(eta(zero_at, theta) == 0.0);
    if (zero_at > 1) CHECK(eta(zero_at - 1, theta) > 0.0);
  }
  CHECK(eta(2, 1.0) == 0.0);
  CHECK_THROWS_AS(eta(0, 0.4), Error);
  CHECK_THROWS_AS(eta(1, 0.0), Error);
  CHECK_THROWS_AS(eta(1, 1.5), Error);
}

TEST_CASE("fusion switches between the two sources") {
  const superpixel::SuperpixelPartition one = superpixel::partition_from_assignment(2, 1, {0, 0});
  const UncertaintyMap g = map_of({1.0, 0.0}, UncertaintyKind::kVesselness);
  const UncertaintyMap m = map_of({0.5, 1.0}, UncertaintyKind::kModel);
  CHECK(fuse_mvu(m, g, 0.6, one).values[0] == doctest::Approx(0.5));
  const UncertaintyMap f = fuse_pixelwise(m, g, 0.6);
  CHECK(f.values[0] == doctest::Approx(0.6));
  CHECK(f.values[1] == doctest::Approx(0.4));
  CHECK(fuse_pixelwise(m, g, 1.0).values == g.values);
  CHECK(fuse_pixelwise(m, g, 0.0).values == m.values);
}

TEST_CASE("superpixel fusion is monotone in both sources") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 24;
    std::vector<int> assign(n);
    for (int& a : assign) a = static_cast<int>(rng.below(4));
    for (int i = 0; i < 4; ++i) assign[i] = i;
    const superpixel::SuperpixelPartition p = superpixel::partition_from_assignment(n, 1, assign);
    std::vector<double> gv(n), mv(n);
    for (double& v : gv) v = rng.uniform();
    for (double& v : mv) v = rng.uniform();
    const double e = rng.uniform();
    const SuperpixelUncertainty base =
        fuse_mvu(map_of(mv, UncertaintyKind::kModel), map_of(gv, UncertaintyKind::kVesselness), e, p);
    const int j = static_cast<int>(rng.below(n));
    std::vector<double> mv2 = mv, gv2 = gv;
    mv2[j] = std::min(1.0, mv2[j] + rng.uniform(0.0, 0.5));
    gv2[j] = std::min(1.0, gv2[j] + rng.uniform(0.0, 0.5));
    const SuperpixelUncertainty raised =
        fuse_mvu(map_of(mv2, UncertaintyKind::kModel), map_of(gv2, UncertaintyKind::kVesselness), e, p);
    for (int id = 0; id < p.n_superpixels; ++id) CHECK(raised.values[id] >= base.values[id]);
  }
}

TEST_CASE("heat image mirrors the map") {
  const GrayImage img = to_image(map_of({0.0, 0.25, 1.0}, UncertaintyKind::kModel));
  CHECK(img.data == std::vector<double>{0.0, 0.25, 1.0});
}
