// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/io/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>

#include "avse/error.h"
#include "avse/io/bytes.h"

namespace avse::io {

std::vector<unsigned char> encode_wav(std::span<const double> samples) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  ByteWriter w;
  w.raw("RIFF", 4);
  w.u32(36 + data_bytes);
  w.raw("WAVE", 4);
  w.raw("fmt ", 4);
  w.u32(16);
  w.u16(1);  // PCM
  w.u16(1);  // mono
  w.u32(kWavRate);
  w.u32(kWavRate * 2);
  w.u16(2);
  w.u16(16);
  w.raw("data", 4);
  w.u32(data_bytes);
  for (double s : samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto code = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    w.u16(static_cast<std::uint16_t>(code));
  }
  return w.take();
}

std::vector<double> decode_wav(std::span<const unsigned char> bytes) {
  ByteReader r(bytes, "wav");
  if (r.tag() != "RIFF") fail(ErrorCode::kFormat, "wav: missing RIFF header");
  r.u32();
  if (r.tag() != "WAVE") fail(ErrorCode::kFormat, "wav: RIFF type is not WAVE");
  bool have_fmt = false;
  while (r.remaining() >= 8) {
    const std::string id = r.tag();
    const std::uint32_t size = r.u32();
    if (id == "fmt ") {
      if (size < 16) fail(ErrorCode::kFormat, "wav: fmt chunk too short");
      const std::uint16_t format = r.u16();
      const std::uint16_t channels = r.u16();
      const std::uint32_t rate = r.u32();
      r.u32();
      r.u16();
      const std::uint16_t bits = r.u16();
      r.skip(size - 16 + (size & 1));
      if (format != 1) fail(ErrorCode::kFormat, "wav: encoding " + std::to_string(format) + " is not PCM");
      if (channels != 1) {
        fail(ErrorCode::kFormat, "wav: " + std::to_string(channels) + " channels, expected 1");
      }
      if (rate != kWavRate) {
        fail(ErrorCode::kFormat, "wav: sample rate " + std::to_string(rate) + " Hz, expected 16000");
      }
      if (bits != 16) fail(ErrorCode::kFormat, "wav: " + std::to_string(bits) + "-bit samples, expected 16");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) fail(ErrorCode::kFormat, "wav: data chunk before fmt chunk");
      if (size % 2 != 0 || size > r.remaining()) fail(ErrorCode::kFormat, "wav: truncated data chunk");
      std::vector<double> out(size / 2);
      for (auto &v : out) v = static_cast<std::int16_t>(r.u16()) / 32768.0;
      return out;
    } else {
      r.skip(size + (size & 1));
    }
  }
  fail(ErrorCode::kFormat, "wav: no data chunk");
}

std::vector<double> read_wav(const std::filesystem::path &path) {
  return decode_wav(read_file(path));
}

void write_wav(const std::filesystem::path &path, std::span<const double> samples) {
  write_file(path, encode_wav(samples));
}

}  // namespace avse::io
