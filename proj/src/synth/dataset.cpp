#include "arspl/synth/dataset.hpp"

#include <cstdio>

#include "arspl/core/error.hpp"
#include "arspl/core/parallel.hpp"
#include "arspl/core/pgm.hpp"
#include "arspl/core/rng.hpp"

namespace arspl::synth {

SynthConfig sequence_config(const DatasetSpec& spec, int index) {
  SynthConfig c = spec.base;
  c.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(index)});
  return c;
}

Manifest write_dataset(const std::filesystem::path& dir, const DatasetSpec& spec) {
  if (spec.train < 0 || spec.val < 0 || spec.test < 0 || spec.train + spec.val + spec.test == 0) {
    throw Error(ErrorCode::kInvalidArgument, "dataset split counts must be >= 0 and not all zero");
  }
  validate(spec.base);
  const int total = spec.train + spec.val + spec.test;
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries(total);
  parallel_for(total, [&](std::size_t i) {
    const SynthSample s = generate_sequence(sequence_config(spec, static_cast<int>(i)));
    char name[32];
    std::snprintf(name, sizeof(name), "seq_%03zu", i);
    save_sequence(s.sequence, dir / name);
    save_label_pgm(s.truth, dir / name / "truth.pgm");
    entries[i] = {name, s.sequence.key_frame_index, std::string(name) + "/truth.pgm"};
  });
  Manifest m;
  m.base_dir = dir;
  m.train.assign(entries.begin(), entries.begin() + spec.train);
  m.val.assign(entries.begin() + spec.train, entries.begin() + spec.train + spec.val);
  m.test.assign(entries.begin() + spec.train + spec.val, entries.end());
  save_manifest(m, dir / "manifest.json");
  return m;
}

}  // namespace arspl::synth
