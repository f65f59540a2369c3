#pragma once

#include <filesystem>
#include <string>

#include "arspl/segmodel/model.hpp"

namespace arspl::segmodel {

// Layout: "ARSPLCKP", u32 format version, u32 header length, JSON header
// {format_version, architecture, seed, step_count, tensors: [{name, shape,
// offset, count}]}, then the tensors as little-endian float64.
inline constexpr unsigned kCheckpointVersion = 1;

std::string encode_checkpoint(const SegModel& model);
SegModel decode_checkpoint(const std::string& bytes);

void save_checkpoint(const SegModel& model, const std::filesystem::path& path);
SegModel load_checkpoint(const std::filesystem::path& path);

}  // namespace arspl::segmodel
