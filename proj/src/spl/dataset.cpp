#include <string>

#include "arspl/core/error.hpp"
#include "arspl/core/parallel.hpp"
#include "arspl/core/pgm.hpp"
#include "arspl/spl/run.hpp"

namespace arspl::spl {

namespace {

struct Loaded {
  GrayImage image;
  layersep::PseudoLabel pseudo;
  std::optional<LabelGrid> truth;
};

Loaded load_entry(const Manifest& manifest, const ManifestEntry& entry, const DatasetConfig& config,
                  bool truth_required) {
  const GraySequence seq = load_sequence(resolve(manifest, entry.sequence_dir), entry.key_frame_index);
  Loaded out{seq.key_frame(), layersep::generate_pseudo_label(seq, config.pseudo), std::nullopt};
  if (entry.ground_truth_path) {
    out.truth = load_label_pgm(resolve(manifest, *entry.ground_truth_path));
    require_same_shape(out.truth->width, out.truth->height, out.image.width, out.image.height, "ground truth");
  } else if (truth_required) {
    throw Error(ErrorCode::kMissingGroundTruth, "entry " + entry.sequence_dir + " has no ground truth");
  }
  return out;
}

}  // namespace

Dataset prepare_dataset(const Manifest& manifest, const DatasetConfig& config) {
  struct Job {
    const ManifestEntry* entry;
    bool truth_required;
  };
  std::vector<Job> jobs;
  for (const auto& e : manifest.train) jobs.push_back({&e, false});
  for (const auto& e : manifest.val) jobs.push_back({&e, true});
  for (const auto& e : manifest.test) jobs.push_back({&e, true});

  std::vector<Loaded> loaded(jobs.size());
  std::vector<superpixel::SuperpixelPartition> partitions(manifest.train.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    loaded[i] = load_entry(manifest, *jobs[i].entry, config, jobs[i].truth_required);
    if (i < partitions.size()) partitions[i] = superpixel::slic(loaded[i].image, config.slic);
  });

  Dataset data;
  std::size_t i = 0;
  for (; i < manifest.train.size(); ++i) {
    data.train.push_back({std::move(loaded[i].image), std::move(loaded[i].pseudo.labels),
                          std::move(loaded[i].pseudo.vesselness), std::move(partitions[i]),
                          std::move(loaded[i].truth)});
  }
  for (; i < manifest.train.size() + manifest.val.size(); ++i) {
    data.val.push_back({std::move(loaded[i].image), std::move(*loaded[i].truth), std::move(loaded[i].pseudo.labels)});
  }
  for (; i < jobs.size(); ++i) {
    data.test.push_back({std::move(loaded[i].image), std::move(*loaded[i].truth), std::move(loaded[i].pseudo.labels)});
  }
  return data;
}

}  // namespace arspl::spl
