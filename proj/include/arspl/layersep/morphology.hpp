#pragma once

#include "arspl/core/image.hpp"

namespace arspl::layersep {

// Flat grayscale morphology with a disk of the given diameter: all offsets
// (dx, dy) with dx^2 + dy^2 <= (diameter / 2)^2. Out-of-image neighbours are
// ignored rather than padded.
GrayImage dilate_disk(const GrayImage& image, int diameter);
GrayImage erode_disk(const GrayImage& image, int diameter);
GrayImage close_disk(const GrayImage& image, int diameter);

// close(frame) - frame for every frame. Dark structures narrower than the
// disk become non-negative ridges; wider structures survive the closing and
// vanish from the difference. Throws if the disk exceeds the image.
GraySequence difference_sequence(const GraySequence& seq, int disk_diameter);

}  // namespace arspl::layersep
