// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/codec.h"

#include <cmath>

#include "avse/core/ops.h"
#include "avse/error.h"

namespace avse {

std::size_t frame_count(std::size_t length, const CodecGeometry &geometry) {
  if (length < geometry.kernel) {
    fail(ErrorCode::kInputTooShort, "signal of " + std::to_string(length) +
                                        " samples is shorter than the " +
                                        std::to_string(geometry.kernel) +
                                        "-sample analysis kernel");
  }
  return (length - geometry.kernel) / geometry.stride + 1;
}

template <typename Real>
CodecParams<Real> init_codec(const CodecGeometry &geometry, std::mt19937_64 &rng) {
  if (geometry.kernel == 0 || geometry.stride == 0 || geometry.filters == 0) {
    fail(ErrorCode::kConfig, "codec geometry must be positive");
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(geometry.kernel));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto draw = [&] {
    std::vector<Real> v(geometry.filters * geometry.kernel);
    for (auto &x : v) x = static_cast<Real>(dist(rng));
    return Tensor<Real>::parameter({geometry.filters, 1, geometry.kernel}, std::move(v));
  };
  CodecParams<Real> codec;
  codec.geometry = geometry;
  codec.analysis = draw();
  codec.synthesis = draw();
  return codec;
}

template <typename Real>
LatentFrames<Real> encode(const Tensor<Real> &wave, const CodecParams<Real> &codec) {
  if (wave.rank() != 1 && wave.rank() != 2) {
    fail(ErrorCode::kDimension, "encode: expected [L] or [B, L], got " +
                                    core::shape_str(wave.shape()));
  }
  const std::size_t length = wave.shape().back();
  frame_count(length, codec.geometry);
  const Shape shape = wave.rank() == 1 ? Shape{1, length}
                                       : Shape{wave.dim(0), 1, length};
  LatentFrames<Real> latent;
  latent.frames = core::relu(
      core::conv1d(core::reshape(wave, shape), codec.analysis, codec.geometry.stride));
  latent.frame_stride = codec.geometry.stride;
  latent.kernel_len = codec.geometry.kernel;
  latent.source_len = length;
  return latent;
}

template <typename Real>
Tensor<Real> decode(const LatentFrames<Real> &latent, const CodecParams<Real> &codec) {
  const auto &g = codec.geometry;
  const Tensor<Real> &x = latent.frames;
  if (latent.frame_stride != g.stride || latent.kernel_len != g.kernel ||
      latent.source_len == 0 || (x.rank() != 2 && x.rank() != 3) ||
      x.dim(x.rank() - 2) != g.filters) {
    fail(ErrorCode::kContract, "decode: latent geometry does not match the codec");
  }
  const std::size_t frames = x.shape().back();
  if (frame_count(latent.source_len, g) != frames) {
    fail(ErrorCode::kContract, "decode: " + std::to_string(frames) +
                                   " frames inconsistent with source length " +
                                   std::to_string(latent.source_len));
  }
  Tensor<Real> wave = core::conv_transpose1d(x, codec.synthesis, g.stride);
  const std::size_t synth_len = wave.shape().back();
  if (x.rank() == 2) {
    wave = core::reshape(wave, {synth_len});
    return core::fit_axis(wave, 0, latent.source_len);
  }
  wave = core::reshape(wave, {x.dim(0), synth_len});
  return core::fit_axis(wave, 1, latent.source_len);
}

template CodecParams<float> init_codec(const CodecGeometry &, std::mt19937_64 &);
template CodecParams<double> init_codec(const CodecGeometry &, std::mt19937_64 &);
template LatentFrames<float> encode(const Tensor<float> &, const CodecParams<float> &);
template LatentFrames<double> encode(const Tensor<double> &, const CodecParams<double> &);
template Tensor<float> decode(const LatentFrames<float> &, const CodecParams<float> &);
template Tensor<double> decode(const LatentFrames<double> &, const CodecParams<double> &);

}  // namespace avse
