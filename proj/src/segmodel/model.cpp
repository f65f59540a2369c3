#include "arspl/segmodel/model.hpp"

#include <cmath>

#include "arspl/core/error.hpp"
#include "arspl/core/rng.hpp"

namespace arspl::segmodel {

namespace {

void add_conv(SegModel& m, const std::string& name, int in, int out, int k, Rng& rng, double gain) {
  ParamTensor w{name + ".weight", {out, in, k, k}, {}};
  const int fan_in = in * k * k;
  const double stddev = gain * std::sqrt(2.0 / fan_in);
  w.values.resize(static_cast<std::size_t>(out) * fan_in);
  for (double& v : w.values) v = stddev * rng.normal();
  m.params.push_back(std::move(w));
  m.params.push_back({name + ".bias", {out}, std::vector<double>(out, 0.0)});
}

}  // namespace

SegModel init_model(std::uint64_t seed, double dropout_rate, std::array<int, 3> widths) {
  for (int w : widths) {
    if (w < 1) throw Error(ErrorCode::kInvalidArgument, "channel widths must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dropout rate must lie in [0, 1)");
  }
  SegModel m;
  m.arch = {widths, dropout_rate};
  m.seed = seed;
  Rng rng(derive_seed(seed, {0x1417}));
  const auto [c0, c1, c2] = widths;
  add_conv(m, "enc0.conv1", 1, c0, 3, rng, 1.0);
  add_conv(m, "enc0.conv2", c0, c0, 3, rng, 1.0);
  add_conv(m, "enc1.conv1", c0, c1, 3, rng, 1.0);
  add_conv(m, "enc1.conv2", c1, c1, 3, rng, 1.0);
  add_conv(m, "mid.conv1", c1, c2, 3, rng, 1.0);
  add_conv(m, "mid.conv2", c2, c2, 3, rng, 1.0);
  add_conv(m, "dec1.conv1", c2 + c1, c1, 3, rng, 1.0);
  add_conv(m, "dec1.conv2", c1, c1, 3, rng, 1.0);
  add_conv(m, "dec0.conv1", c1 + c0, c0, 3, rng, 1.0);
  add_conv(m, "dec0.conv2", c0, c0, 3, rng, 1.0);
  // Small head so a fresh model starts near p = 0.5.
  add_conv(m, "head", c0, 2, 1, rng, 0.1);
  return m;
}

std::size_t parameter_count(const SegModel& model) {
  std::size_t n = 0;
  for (const auto& p : model.params) n += p.values.size();
  return n;
}

std::vector<double> flat_parameters(const SegModel& model) {
  std::vector<double> flat;
  flat.reserve(parameter_count(model));
  for (const auto& p : model.params) flat.insert(flat.end(), p.values.begin(), p.values.end());
  return flat;
}

void set_flat_parameters(SegModel& model, const std::vector<double>& flat) {
  if (flat.size() != parameter_count(model)) {
    throw Error(ErrorCode::kDimensionMismatch, "flat parameter vector has the wrong length");
  }
  std::size_t at = 0;
  for (auto& p : model.params) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(at),
              flat.begin() + static_cast<std::ptrdiff_t>(at + p.values.size()), p.values.begin());
    at += p.values.size();
  }
}

}  // namespace arspl::segmodel
