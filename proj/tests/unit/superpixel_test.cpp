#include <doctest.h>

#include <filesystem>
#include <queue>
#include <set>

#include "arspl/core/error.hpp"
#include "arspl/core/rng.hpp"
#include "arspl/superpixel/slic.hpp"
#include "arspl/synth/synth.hpp"

using namespace arspl;
using namespace arspl::superpixel;

namespace {

void check_partition(const SuperpixelPartition& p) {
  const std::size_t n = static_cast<std::size_t>(p.width) * p.height;
  REQUIRE(p.assignment.size() == n);
  REQUIRE(static_cast<int>(p.members.size()) == p.n_superpixels);
  std::vector<int> seen(n, 0);
  for (int id = 0; id < p.n_superpixels; ++id) {
    CHECK_FALSE(p.members[id].empty());
    for (int px : p.members[id]) {
      ++seen[px];
      CHECK(p.assignment[px] == id);
    }
  }
  for (int c : seen) CHECK(c == 1);
  // Flood fill from the first member reaches every member.
  for (int id = 0; id < p.n_superpixels; ++id) {
    std::set<int> reached{p.members[id].front()};
    std::queue<int> q;
    q.push(p.members[id].front());
    while (!q.empty()) {
      const int px = q.front();
      q.pop();
      const int x = px % p.width, y = px / p.width;
      const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& c : nb) {
        if (c[0] < 0 || c[1] < 0 || c[0] >= p.width || c[1] >= p.height) continue;
        const int j = c[1] * p.width + c[0];
        if (p.assignment[j] == id && reached.insert(j).second) q.push(j);
      }
    }
    CHECK(reached.size() == p.members[id].size());
  }
}

GrayImage random_image(Rng& rng, int w, int h) {
  GrayImage img(w, h);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

}  // namespace

TEST_CASE("target one gives a single superpixel") {
  Rng rng(1);
  const SuperpixelPartition p = slic(random_image(rng, 20, 13), 1);
  CHECK(p.n_superpixels == 1);
  check_partition(p);
}

TEST_CASE("constant image with target 16 gives 16 square tiles") {
  const SuperpixelPartition p = slic(GrayImage(64, 64, 0.5), 16);
  REQUIRE(p.n_superpixels == 16);
  check_partition(p);
  for (const auto& m : p.members) {
    CHECK(m.size() == 256);
    int x0 = 64, x1 = -1, y0 = 64, y1 = -1;
    for (int px : m) {
      x0 = std::min(x0, px % 64);
      x1 = std::max(x1, px % 64);
      y0 = std::min(y0, px / 64);
      y1 = std::max(y1, px / 64);
    }
    CHECK(x1 - x0 == 15);
    CHECK(y1 - y0 == 15);
  }
}

TEST_CASE("random images give valid connected partitions near the target") {
  Rng rng(44);
  for (int trial = 0; trial < 12; ++trial) {
    const int w = 16 + static_cast<int>(rng.below(60)), h = 16 + static_cast<int>(rng.below(60));
    const int target = 4 + static_cast<int>(rng.below(80));
    const GrayImage img = random_image(rng, w, h);
    const SuperpixelPartition p = slic(img, target);
    CAPTURE(w);
    CAPTURE(h);
    CAPTURE(target);
    check_partition(p);
    CHECK(p.n_superpixels >= 0.7 * target);
    CHECK(p.n_superpixels <= 1.3 * target);
    CHECK(slic(img, target) == p);
  }
}

TEST_CASE("synthetic vessel image superpixels are mostly pure") {
  synth::SynthConfig c;
  c.seed = 20261019;
  const synth::SynthSample s = synth::generate_sequence(c);
  const SuperpixelPartition p = slic(s.sequence.key_frame(), 64);
  check_partition(p);
  CHECK(p.n_superpixels >= 0.7 * 64);
  CHECK(p.n_superpixels <= 1.3 * 64);
  int pure = 0;
  for (const auto& m : p.members) {
    std::size_t fg = 0;
    for (int px : m) fg += s.truth.labels[px];
    const double frac = static_cast<double>(fg) / static_cast<double>(m.size());
    pure += (frac >= 0.7 || frac <= 0.3) ? 1 : 0;
  }
  CHECK(pure >= 0.9 * p.n_superpixels);
}

TEST_CASE("default superpixel count scales with area") {
  CHECK(default_superpixel_count(512, 512) == 3000);
  CHECK(default_superpixel_count(64, 64) == 47);
  CHECK(default_superpixel_count(2, 2) >= 1);
}

TEST_CASE("slic rejects invalid targets") {
  const GrayImage img(4, 4, 0.1);
  CHECK_THROWS_AS(slic(img, 17), Error);
  CHECK_THROWS_AS(slic(img, 0), Error);
}

TEST_CASE("partitions round trip through the raw grid format") {
  Rng rng(2);
  const SuperpixelPartition p = slic(random_image(rng, 33, 21), 20);
  const auto path = std::filesystem::temp_directory_path() / "arspl_partition.raw";
  save_partition(p, path);
  CHECK(load_partition(path) == p);
  CHECK(std::filesystem::file_size(path) == 33 * 21 * 2);
}

TEST_CASE("partition_from_assignment rebuilds members") {
  const SuperpixelPartition p = partition_from_assignment(3, 2, {0, 0, 1, 2, 2, 1});
  CHECK(p.n_superpixels == 3);
  CHECK(p.members[1] == std::vector<int>{2, 5});
  CHECK(p.members[2] == std::vector<int>{3, 4});
}
