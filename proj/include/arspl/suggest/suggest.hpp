#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include <json.hpp>

#include "arspl/core/image.hpp"
#include "arspl/segmodel/predict.hpp"
#include "arspl/superpixel/slic.hpp"
#include "arspl/uncertainty/uncertainty.hpp"

namespace arspl::suggest {

struct QueryBatch {
  int image_id = 0;
  int iteration = 0;
  std::vector<int> superpixels;     // ranked, most uncertain first
  std::vector<double> uncertainty;  // U at query time, parallel to superpixels

  bool operator==(const QueryBatch&) const = default;
};

// Labels of one superpixel, ordered like partition.members[id].
struct SuperpixelLabels {
  int id = 0;
  std::vector<std::uint8_t> labels;

  bool operator==(const SuperpixelLabels&) const = default;
};

struct AnnotationSet {
  int image_id = 0;
  int iteration = 0;
  std::vector<SuperpixelLabels> superpixels;

  bool operator==(const AnnotationSet&) const = default;
};

// Q*: every superpixel labelled so far, with its labels kept verbatim.
struct AnnotationStore {
  std::map<int, std::vector<std::uint8_t>> labeled;

  std::set<int> ids() const;
  std::size_t size() const { return labeled.size(); }
  bool contains(int id) const { return labeled.count(id) != 0; }

  bool operator==(const AnnotationStore&) const = default;
};

// Unlabelled superpixels ranked by U descending, ties by ascending id; the
// first min(n_b, pool) form the batch.
QueryBatch select_queries(const uncertainty::SuperpixelUncertainty& u, const std::set<int>& labeled, int n_b,
                          int image_id = 0, int iteration = 0);

// Ground truth restricted to the queried superpixels.
AnnotationSet oracle_annotate(const QueryBatch& batch, const LabelGrid& truth,
                              const superpixel::SuperpixelPartition& partition);

// Adds `update` to `store`. Throws Error(kAlreadyLabeled) if any superpixel
// is already in the store (the store is then left unchanged).
void merge_annotations(AnnotationStore& store, const AnnotationSet& update);

// Run lengths of alternating values, starting with a (possibly empty) run of 0.
std::vector<int> rle_encode(const std::vector<std::uint8_t>& labels);
std::vector<std::uint8_t> rle_decode(const std::vector<int>& runs);

// {"image_id", "iteration", "superpixels": [{"id", "labels": [runs]}]}
nlohmann::json to_json(const AnnotationSet& set);
AnnotationSet annotation_set_from_json(const nlohmann::json& j);

// Everything an annotator sees for one training image. Pointers stay valid
// for the duration of Annotator::annotate.
struct QueryRequest {
  QueryBatch batch;
  const GrayImage* image = nullptr;
  const superpixel::SuperpixelPartition* partition = nullptr;
  const segmodel::ProbMap* prediction = nullptr;
};

// Given the query batches of one iteration (one per training image), returns
// one AnnotationSet per request in the same order. Throws
// Error(kAnnotatorAborted) to suspend the run.
class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual std::vector<AnnotationSet> annotate(std::span<const QueryRequest> requests) = 0;
};

// Answers from ground truth masks indexed by image id.
class OracleAnnotator final : public Annotator {
 public:
  explicit OracleAnnotator(std::vector<LabelGrid> truths) : truths_(std::move(truths)) {}
  std::vector<AnnotationSet> annotate(std::span<const QueryRequest> requests) override;

 private:
  std::vector<LabelGrid> truths_;
};

}  // namespace arspl::suggest
