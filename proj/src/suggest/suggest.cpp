#include "arspl/suggest/suggest.hpp"

#include <algorithm>
#include <numeric>

#include "arspl/core/error.hpp"

namespace arspl::suggest {

std::set<int> AnnotationStore::ids() const {
  std::set<int> out;
  for (const auto& [id, labels] : labeled) out.insert(id);
  return out;
}

QueryBatch select_queries(const uncertainty::SuperpixelUncertainty& u, const std::set<int>& labeled, int n_b,
                          int image_id, int iteration) {
  if (n_b < 0) throw Error(ErrorCode::kInvalidArgument, "query batch size must be >= 0");
  std::vector<int> pool;
  pool.reserve(u.values.size());
  for (int q = 0; q < static_cast<int>(u.values.size()); ++q) {
    if (!labeled.count(q)) pool.push_back(q);
  }
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(n_b), pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(), [&](int a, int b) {
    if (u.values[a] != u.values[b]) return u.values[a] > u.values[b];
    return a < b;
  });
  QueryBatch batch{image_id, iteration, {}, {}};
  for (std::size_t i = 0; i < take; ++i) {
    batch.superpixels.push_back(pool[i]);
    batch.uncertainty.push_back(u.values[pool[i]]);
  }
  return batch;
}

AnnotationSet oracle_annotate(const QueryBatch& batch, const LabelGrid& truth,
                              const superpixel::SuperpixelPartition& partition) {
  require_same_shape(truth.width, truth.height, partition.width, partition.height, "oracle_annotate");
  AnnotationSet out{batch.image_id, batch.iteration, {}};
  for (int id : batch.superpixels) {
    if (id < 0 || id >= partition.n_superpixels) {
      throw Error(ErrorCode::kUnknownSuperpixel, "query names unknown superpixel " + std::to_string(id));
    }
    SuperpixelLabels sp{id, {}};
    sp.labels.reserve(partition.members[id].size());
    for (int p : partition.members[id]) sp.labels.push_back(truth.labels[p]);
    out.superpixels.push_back(std::move(sp));
  }
  return out;
}

void merge_annotations(AnnotationStore& store, const AnnotationSet& update) {
  std::set<int> incoming;
  for (const auto& sp : update.superpixels) {
    if (store.contains(sp.id) || !incoming.insert(sp.id).second) {
      throw Error(ErrorCode::kAlreadyLabeled, "superpixel " + std::to_string(sp.id) + " is already labeled");
    }
    if (std::any_of(sp.labels.begin(), sp.labels.end(), [](std::uint8_t v) { return v > 1; })) {
      throw Error(ErrorCode::kInvalidArgument, "annotation labels must be 0 or 1");
    }
  }
  for (const auto& sp : update.superpixels) store.labeled.emplace(sp.id, sp.labels);
}

std::vector<int> rle_encode(const std::vector<std::uint8_t>& labels) {
  std::vector<int> runs;
  std::uint8_t current = 0;
  int length = 0;
  for (std::uint8_t v : labels) {
    const std::uint8_t b = v ? 1 : 0;
    if (b != current) {
      runs.push_back(length);
      current = b;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

std::vector<std::uint8_t> rle_decode(const std::vector<int>& runs) {
  std::vector<std::uint8_t> out;
  std::uint8_t value = 0;
  for (int r : runs) {
    if (r < 0) throw Error(ErrorCode::kInvalidArgument, "negative run length");
    out.insert(out.end(), static_cast<std::size_t>(r), value);
    value ^= 1;
  }
  return out;
}

nlohmann::json to_json(const AnnotationSet& set) {
  nlohmann::json sps = nlohmann::json::array();
  for (const auto& sp : set.superpixels) sps.push_back({{"id", sp.id}, {"labels", rle_encode(sp.labels)}});
  return {{"image_id", set.image_id}, {"iteration", set.iteration}, {"superpixels", sps}};
}

AnnotationSet annotation_set_from_json(const nlohmann::json& j) {
  try {
    AnnotationSet out{j.at("image_id").get<int>(), j.at("iteration").get<int>(), {}};
    for (const auto& sp : j.at("superpixels")) {
      out.superpixels.push_back({sp.at("id").get<int>(), rle_decode(sp.at("labels").get<std::vector<int>>())});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed AnnotationSet: ") + e.what());
  }
}

std::vector<AnnotationSet> OracleAnnotator::annotate(std::span<const QueryRequest> requests) {
  std::vector<AnnotationSet> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    const int id = r.batch.image_id;
    if (id < 0 || id >= static_cast<int>(truths_.size()) || truths_[id].labels.empty()) {
      throw Error(ErrorCode::kMissingGroundTruth, "no ground truth for image " + std::to_string(id));
    }
    out.push_back(oracle_annotate(r.batch, truths_[id], *r.partition));
  }
  return out;
}

}  // namespace arspl::suggest
