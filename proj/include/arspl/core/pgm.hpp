#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "arspl/core/image.hpp"

namespace arspl {

// Binary PGM (P5, maxval 255) only. Bytes are mapped to [0,1] by /255.
GrayImage load_pgm(const std::filesystem::path& path);
GrayImage decode_pgm(const std::string& bytes);

// Values are clamped to [0,1] and stored as round(v * 255).
void save_pgm(const GrayImage& image, const std::filesystem::path& path);
std::string encode_pgm(const GrayImage& image);

LabelGrid load_label_pgm(const std::filesystem::path& path);
void save_label_pgm(const LabelGrid& labels, const std::filesystem::path& path);
GrayImage labels_to_image(const LabelGrid& labels);
LabelGrid image_to_labels(const GrayImage& image);

std::uint8_t quantize_unit(double value);

}  // namespace arspl
