// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Learned time-domain analysis/synthesis filterbank.

#pragma once

#include <cstddef>
#include <random>

#include "avse/core/tensor.h"

namespace avse {

using core::Shape;
using core::Tensor;

struct CodecGeometry {
  std::size_t kernel = 40;
  std::size_t stride = 20;
  std::size_t filters = 64;
};

// Number of analysis frames for a signal of `length` samples.
std::size_t frame_count(std::size_t length, const CodecGeometry &geometry);

template <typename Real>
struct CodecParams {
  CodecGeometry geometry;
  Tensor<Real> analysis;   // [filters, 1, kernel]
  Tensor<Real> synthesis;  // [filters, 1, kernel]
};

template <typename Real>
CodecParams<Real> init_codec(const CodecGeometry &geometry, std::mt19937_64 &rng);

template <typename Real>
struct LatentFrames {
  Tensor<Real> frames;  // [filters, T] or [B, filters, T]
  std::size_t frame_stride = 0;
  std::size_t kernel_len = 0;
  std::size_t source_len = 0;
};

// wave [L] or [B, L] -> rectified analysis frames.
template <typename Real>
LatentFrames<Real> encode(const Tensor<Real> &wave, const CodecParams<Real> &codec);

// Overlap-add synthesis trimmed or zero-padded to source_len: [L] or [B, L].
template <typename Real>
Tensor<Real> decode(const LatentFrames<Real> &latent, const CodecParams<Real> &codec);

}  // namespace avse
