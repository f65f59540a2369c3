#include "arspl/core/metrics.hpp"

namespace arspl {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

MetricReport metrics_from_counts(std::int64_t tp, std::int64_t fn, std::int64_t fp) {
  MetricReport r;
  r.tp = tp;
  r.fn = fn;
  r.fp = fp;
  r.recall = ratio(tp, tp + fn);
  r.precision = ratio(tp, tp + fp);
  r.dice = ratio(2 * tp, 2 * tp + fn + fp);
  return r;
}

MetricReport evaluate_mask(const LabelGrid& pred, const LabelGrid& truth) {
  require_same_shape(pred.width, pred.height, truth.width, truth.height, "evaluate_mask");
  std::int64_t tp = 0, fn = 0, fp = 0;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    const bool p = pred.labels[i] != 0;
    const bool t = truth.labels[i] != 0;
    tp += p && t;
    fn += !p && t;
    fp += p && !t;
  }
  return metrics_from_counts(tp, fn, fp);
}

MetricReport mean_metrics(std::span<const MetricReport> reports) {
  MetricReport out;
  if (reports.empty()) return out;
  for (const auto& r : reports) {
    out.tp += r.tp;
    out.fn += r.fn;
    out.fp += r.fp;
    out.recall += r.recall;
    out.precision += r.precision;
    out.dice += r.dice;
  }
  const double n = static_cast<double>(reports.size());
  out.recall /= n;
  out.precision /= n;
  out.dice /= n;
  return out;
}

}  // namespace arspl
