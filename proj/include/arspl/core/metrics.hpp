#pragma once

#include <cstdint>
#include <span>

#include "arspl/core/image.hpp"

namespace arspl {

struct MetricReport {
  std::int64_t tp = 0;
  std::int64_t fn = 0;
  std::int64_t fp = 0;
  double recall = 0.0;
  double precision = 0.0;
  double dice = 0.0;
};

// Pixel-wise recall, precision and dice. Any 0/0 ratio is reported as 0.
MetricReport evaluate_mask(const LabelGrid& pred, const LabelGrid& truth);

// Builds the ratios from raw counts with the same 0/0 convention.
MetricReport metrics_from_counts(std::int64_t tp, std::int64_t fn, std::int64_t fp);

// Per-image mean of recall, precision and dice; counts are pooled.
MetricReport mean_metrics(std::span<const MetricReport> reports);

}  // namespace arspl
