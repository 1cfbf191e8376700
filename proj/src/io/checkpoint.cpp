// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/io/checkpoint.h"

#include <cstring>

#include "avse/error.h"
#include "avse/io/bytes.h"
#include "avse/io/config.h"

namespace avse::io {

namespace {

constexpr char kMagic[8] = {'I', 'S', 'A', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint8_t kFloat32 = 0;
constexpr std::uint8_t kFloat64 = 1;

}  // namespace

std::vector<unsigned char> encode_checkpoint(ExtractorModel<float> &model) {
  const auto params = model.named_parameters();
  ByteWriter w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto &[name, t] : params) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    w.u8(kFloat32);
    w.u32(static_cast<std::uint32_t>(t->rank()));
    for (std::size_t d : t->shape()) w.u64(d);
  }
  for (const auto &[name, t] : params) {
    for (float v : t->data()) w.f32(v);
  }
  return w.take();
}

void decode_checkpoint(std::span<const unsigned char> bytes, ExtractorModel<float> &model) {
  ByteReader r(bytes, "checkpoint");
  if (r.text(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    fail(ErrorCode::kFormat, "checkpoint: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kFormat, "checkpoint: unsupported version " + std::to_string(version));
  }
  auto params = model.named_parameters();
  const std::uint32_t count = r.u32();
  if (count != params.size()) {
    fail(ErrorCode::kFormat, "checkpoint: " + std::to_string(count) + " tensors, model has " +
                                 std::to_string(params.size()));
  }
  std::vector<std::uint8_t> dtypes(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.text(r.u32());
    dtypes[i] = r.u8();
    core::Shape shape(r.u32());
    for (auto &d : shape) d = r.u64();
    if (name != params[i].first || shape != params[i].second->shape()) {
      fail(ErrorCode::kFormat, "checkpoint: entry " + std::to_string(i) + " is " + name + " " +
                                   core::shape_str(shape) + ", model expects " +
                                   params[i].first + " " +
                                   core::shape_str(params[i].second->shape()));
    }
    if (dtypes[i] != kFloat32 && dtypes[i] != kFloat64) {
      fail(ErrorCode::kFormat, "checkpoint: unknown dtype for " + name);
    }
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    auto values = params[i].second->mutable_data();
    for (auto &v : values) v = dtypes[i] == kFloat32 ? r.f32() : static_cast<float>(r.f64());
  }
  if (r.remaining() != 0) fail(ErrorCode::kFormat, "checkpoint: trailing bytes");
}

std::filesystem::path sidecar_path(const std::filesystem::path &checkpoint) {
  return std::filesystem::path(checkpoint.string() + ".ini");
}

void save_checkpoint(const std::filesystem::path &path, ExtractorModel<float> &model) {
  write_file(path, encode_checkpoint(model));
  RunConfig config;
  config.model = model.config;
  save_config(sidecar_path(path), config);
}

ExtractorModel<float> load_checkpoint(const std::filesystem::path &path) {
  const RunConfig config = load_config(sidecar_path(path));
  ExtractorModel<float> model = init_model<float>(config.model, 0);
  decode_checkpoint(read_file(path), model);
  return model;
}

}  // namespace avse::io
