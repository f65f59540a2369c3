#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace arspl::segmodel {

// Two-level encoder/decoder with skip connections:
//   enc0: conv3x3(1->w0) relu conv3x3(w0->w0) relu          [H x W]
//   enc1: pool2, conv3x3(w0->w1) relu conv3x3(w1->w1) relu  [H/2]
//   mid:  pool2, conv3x3(w1->w2) relu conv3x3(w2->w2) relu  [H/4]
//   dec1: up2, concat enc1, conv3x3(w2+w1->w1) relu conv3x3 relu, dropout
//   dec0: up2, concat enc0, conv3x3(w1+w0->w0) relu conv3x3 relu, dropout
//   head: conv1x1(w0->2), softmax
// Inputs are standardized per image before enc0.
struct ModelArch {
  std::array<int, 3> widths{8, 16, 32};
  double dropout_rate = 0.2;

  bool operator==(const ModelArch&) const = default;
};

struct ParamTensor {
  std::string name;
  std::vector<int> shape;  // conv weights: {out, in, k, k}; biases: {out}
  std::vector<double> values;

  bool operator==(const ParamTensor&) const = default;
};

struct SegModel {
  ModelArch arch;
  std::uint64_t seed = 0;
  std::int64_t step_count = 0;  // optimizer steps taken so far
  std::vector<ParamTensor> params;

  bool operator==(const SegModel&) const = default;
};

// He-scaled normal weights and zero biases, drawn from `seed`.
SegModel init_model(std::uint64_t seed, double dropout_rate = 0.2,
                    std::array<int, 3> channel_widths = {8, 16, 32});

std::size_t parameter_count(const SegModel& model);
std::vector<double> flat_parameters(const SegModel& model);
void set_flat_parameters(SegModel& model, const std::vector<double>& flat);

}  // namespace arspl::segmodel
