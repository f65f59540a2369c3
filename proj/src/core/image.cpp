#include "arspl/core/image.hpp"

#include <algorithm>
#include <string>

#include "arspl/core/error.hpp"

namespace arspl {

namespace {

void check_dims(int w, int h) {
  if (w <= 0 || h <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "image dimensions must be positive, got " + std::to_string(w) + "x" +
                    std::to_string(h));
  }
}

}  // namespace

GrayImage::GrayImage(int w, int h, double fill) : width(w), height(h) {
  check_dims(w, h);
  data.assign(static_cast<std::size_t>(w) * h, fill);
}

GrayImage::GrayImage(int w, int h, std::vector<double> values)
    : width(w), height(h), data(std::move(values)) {
  check_dims(w, h);
  if (data.size() != static_cast<std::size_t>(w) * h) {
    throw Error(ErrorCode::kDimensionMismatch, "image data length does not match dimensions");
  }
}

GraySequence::GraySequence(std::vector<GrayImage> f, int key)
    : frames(std::move(f)), key_frame_index(key) {
  if (frames.empty()) throw Error(ErrorCode::kInvalidArgument, "sequence has no frames");
  if (key < 0 || key >= static_cast<int>(frames.size())) {
    throw Error(ErrorCode::kInvalidArgument, "key frame index out of range");
  }
  for (const auto& fr : frames) {
    require_same_shape(fr.width, fr.height, frames.front().width, frames.front().height,
                       "sequence frame");
  }
}

LabelGrid::LabelGrid(int w, int h, std::uint8_t fill) : width(w), height(h) {
  check_dims(w, h);
  labels.assign(static_cast<std::size_t>(w) * h, fill ? 1 : 0);
}

LabelGrid::LabelGrid(int w, int h, std::vector<std::uint8_t> values)
    : width(w), height(h), labels(std::move(values)) {
  check_dims(w, h);
  if (labels.size() != static_cast<std::size_t>(w) * h) {
    throw Error(ErrorCode::kDimensionMismatch, "label data length does not match dimensions");
  }
  if (std::any_of(labels.begin(), labels.end(), [](std::uint8_t v) { return v > 1; })) {
    throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
  }
}

std::size_t LabelGrid::foreground_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void require_same_shape(int w0, int h0, int w1, int h1, const char* what) {
  if (w0 != w1 || h0 != h1) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": " + std::to_string(w0) + "x" + std::to_string(h0) +
                    " vs " + std::to_string(w1) + "x" + std::to_string(h1));
  }
}

}  // namespace arspl
