// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Visual stream layout (little-endian):
//
//   "AVSEVIS1"  u32 n_frames  u32 dims  f64 fps  u64 identity_seed
//   n_frames x dims float32, row-major

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "avse/visual.h"

namespace avse::io {

std::vector<unsigned char> encode_visual_stream(const VisualStream &stream);
VisualStream decode_visual_stream(std::span<const unsigned char> bytes);

void write_visual_stream(const std::filesystem::path &path, const VisualStream &stream);
VisualStream read_visual_stream(const std::filesystem::path &path);

}  // namespace avse::io
