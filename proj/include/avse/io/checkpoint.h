// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Checkpoint layout (all integers little-endian):
//
//   "ISAMCKPT"  u32 version  u32 entry_count
//   entry_count x { u32 name_len, name bytes, u8 dtype, u32 ndim, ndim x u64 dim }
//   payloads in table order, IEEE-754 little-endian
//
// dtype 0 is float32 and 1 is float64. The model configuration is stored
// next to the checkpoint as "<path>.ini".

#pragma once

#include <filesystem>
#include <vector>

#include "avse/extractor.h"

namespace avse::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<unsigned char> encode_checkpoint(ExtractorModel<float> &model);
// Fills `model` (already built for the right configuration) from `bytes`.
void decode_checkpoint(std::span<const unsigned char> bytes, ExtractorModel<float> &model);

void save_checkpoint(const std::filesystem::path &path, ExtractorModel<float> &model);
ExtractorModel<float> load_checkpoint(const std::filesystem::path &path);

std::filesystem::path sidecar_path(const std::filesystem::path &checkpoint);

}  // namespace avse::io
