#pragma once

#include <cstdint>
#include <filesystem>

#include "arspl/core/manifest.hpp"
#include "arspl/synth/synth.hpp"

namespace arspl::synth {

struct DatasetSpec {
  std::uint64_t seed = 1;
  int train = 20;
  int val = 5;
  int test = 10;
  SynthConfig base;  // seed is replaced per sequence
};

// Sequence i (train first, then val, then test) uses
// derive_seed(spec.seed, {i}).
SynthConfig sequence_config(const DatasetSpec& spec, int index);

// Writes <dir>/seq_NNN/frame_TTT.pgm, <dir>/seq_NNN/truth.pgm and
// <dir>/manifest.json with relative paths. Returns the manifest.
Manifest write_dataset(const std::filesystem::path& dir, const DatasetSpec& spec);

}  // namespace arspl::synth
