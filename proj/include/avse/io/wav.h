// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// 16 kHz mono 16-bit PCM RIFF/WAVE files. Samples map to [-1, 1) by 1/32768.

#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace avse::io {

inline constexpr std::uint32_t kWavRate = 16000;

std::vector<double> read_wav(const std::filesystem::path &path);

// Samples are clamped to [-1, 1] and rounded to the nearest code.
void write_wav(const std::filesystem::path &path, std::span<const double> samples);

std::vector<unsigned char> encode_wav(std::span<const double> samples);
std::vector<double> decode_wav(std::span<const unsigned char> bytes);

}  // namespace avse::io
