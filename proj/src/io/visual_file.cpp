// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/io/visual_file.h"

#include <cmath>
#include <limits>

#include "avse/error.h"
#include "avse/io/bytes.h"

namespace avse::io {

namespace {
constexpr char kMagic[] = "AVSEVIS1";
}  // namespace

std::vector<unsigned char> encode_visual_stream(const VisualStream &stream) {
  if (stream.frames.size() != stream.n_frames * stream.dims) {
    fail(ErrorCode::kContract, "visual stream: frame buffer does not match its shape");
  }
  if (stream.n_frames > std::numeric_limits<std::uint32_t>::max() ||
      stream.dims > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kContract, "visual stream: shape does not fit the header");
  }
  ByteWriter w;
  w.raw(kMagic, 8);
  w.u32(static_cast<std::uint32_t>(stream.n_frames));
  w.u32(static_cast<std::uint32_t>(stream.dims));
  w.f64(stream.fps);
  w.u64(stream.identity_seed);
  for (float v : stream.frames) w.f32(v);
  return w.take();
}

VisualStream decode_visual_stream(std::span<const unsigned char> bytes) {
  ByteReader r(bytes, "visual stream");
  if (r.text(8) != kMagic) fail(ErrorCode::kFormat, "visual stream: bad magic");
  VisualStream s;
  s.n_frames = r.u32();
  s.dims = r.u32();
  s.fps = r.f64();
  s.identity_seed = r.u64();
  if (s.dims == 0 || !(s.fps > 0.0) || !std::isfinite(s.fps)) {
    fail(ErrorCode::kFormat, "visual stream: invalid dims or frame rate");
  }
  if (r.remaining() != s.n_frames * s.dims * 4) {
    fail(ErrorCode::kFormat, "visual stream: payload holds " + std::to_string(r.remaining()) +
                                 " bytes, header implies " +
                                 std::to_string(s.n_frames * s.dims * 4));
  }
  s.frames.resize(s.n_frames * s.dims);
  for (auto &v : s.frames) v = r.f32();
  return s;
}

void write_visual_stream(const std::filesystem::path &path, const VisualStream &stream) {
  write_file(path, encode_visual_stream(stream));
}

VisualStream read_visual_stream(const std::filesystem::path &path) {
  return decode_visual_stream(read_file(path));
}

}  // namespace avse::io
