#include "synthetic_dataset.hpp"

#include "arspl/core/parallel.hpp"
#include "arspl/core/pgm.hpp"
#include "arspl/core/rng.hpp"

namespace arspl::testing {

namespace {

GrayImage quantized(const GrayImage& image) { return decode_pgm(encode_pgm(image)); }

}  // namespace

spl::Dataset make_synthetic_dataset(std::uint64_t seed, const SyntheticSplit& split, const synth::SynthConfig& base,
                                    const spl::DatasetConfig& config) {
  const int total = split.train + split.val + split.test;
  struct Item {
    GraySequence seq;
    LabelGrid truth;
    layersep::PseudoLabel pseudo;
    superpixel::SuperpixelPartition partition;
  };
  std::vector<Item> items(total);
  parallel_for(total, [&](std::size_t i) {
    synth::SynthConfig c = base;
    c.seed = derive_seed(seed, {i});
    synth::SynthSample s = synth::generate_sequence(c);
    std::vector<GrayImage> frames;
    for (const auto& f : s.sequence.frames) frames.push_back(quantized(f));
    items[i].seq = GraySequence(std::move(frames), s.sequence.key_frame_index);
    items[i].truth = s.truth;
    items[i].pseudo = layersep::generate_pseudo_label(items[i].seq, config.pseudo);
    if (static_cast<int>(i) < split.train) items[i].partition = superpixel::slic(items[i].seq.key_frame(), config.slic);
  });
  spl::Dataset data;
  for (int i = 0; i < total; ++i) {
    Item& it = items[i];
    if (i < split.train) {
      data.train.push_back({it.seq.key_frame(), std::move(it.pseudo.labels), std::move(it.pseudo.vesselness),
                            std::move(it.partition), std::move(it.truth)});
    } else {
      spl::EvalImage e{it.seq.key_frame(), std::move(it.truth), std::move(it.pseudo.labels)};
      (i < split.train + split.val ? data.val : data.test).push_back(std::move(e));
    }
  }
  return data;
}

}  // namespace arspl::testing
