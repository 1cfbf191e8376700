// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Differentiable operations. Binary elementwise ops accept either equal
// shapes or a right operand whose shape is a suffix of the left operand's
// shape (leading-axis expansion, e.g. a bias [d] against [n, d]); nothing
// else broadcasts.

#pragma once

#include <cstddef>
#include <vector>

#include "avse/core/tensor.h"

namespace avse::core {

// ---- elementwise -----------------------------------------------------------

template <typename Real> Tensor<Real> add(const Tensor<Real> &a, const Tensor<Real> &b);
template <typename Real> Tensor<Real> sub(const Tensor<Real> &a, const Tensor<Real> &b);
template <typename Real> Tensor<Real> mul(const Tensor<Real> &a, const Tensor<Real> &b);
template <typename Real> Tensor<Real> div(const Tensor<Real> &a, const Tensor<Real> &b);

template <typename Real> Tensor<Real> add_scalar(const Tensor<Real> &a, Real s);
template <typename Real> Tensor<Real> mul_scalar(const Tensor<Real> &a, Real s);

template <typename Real> Tensor<Real> relu(const Tensor<Real> &a);
template <typename Real> Tensor<Real> sigmoid(const Tensor<Real> &a);
template <typename Real> Tensor<Real> tanh(const Tensor<Real> &a);
template <typename Real> Tensor<Real> exp(const Tensor<Real> &a);
template <typename Real> Tensor<Real> log(const Tensor<Real> &a);
template <typename Real> Tensor<Real> sqrt(const Tensor<Real> &a);
template <typename Real> Tensor<Real> square(const Tensor<Real> &a);

// Values are clipped to [lo, hi]; clipped positions pass no gradient.
template <typename Real> Tensor<Real> clamp(const Tensor<Real> &a, Real lo, Real hi);

// ---- reductions ------------------------------------------------------------

// Full reductions return shape [1].
template <typename Real> Tensor<Real> sum(const Tensor<Real> &a);
template <typename Real> Tensor<Real> mean(const Tensor<Real> &a);
// Reduce the last axis: [..., n] -> [...] ([n] -> [1]).
template <typename Real> Tensor<Real> sum_last(const Tensor<Real> &a);

// ---- linear algebra --------------------------------------------------------

// [m, k] x [k, n] -> [m, n]
template <typename Real> Tensor<Real> matmul(const Tensor<Real> &a, const Tensor<Real> &b);

// [b, m, k] x [b, k, n] -> [b, m, n]; with transpose_b, b is [b, n, k].
template <typename Real>
Tensor<Real> bmm(const Tensor<Real> &a, const Tensor<Real> &b,
                 bool transpose_b = false);

// x [..., in] * w [in, out] + bias [out] -> [..., out]. `bias` may be an
// undefined tensor.
template <typename Real>
Tensor<Real> affine(const Tensor<Real> &x, const Tensor<Real> &w,
                    const Tensor<Real> &bias);

// ---- shape -----------------------------------------------------------------

template <typename Real> Tensor<Real> reshape(const Tensor<Real> &a, const Shape &shape);
template <typename Real>
Tensor<Real> permute(const Tensor<Real> &a, const std::vector<std::size_t> &perm);
template <typename Real> Tensor<Real> concat_last(const std::vector<Tensor<Real>> &parts);
// Stacks equal-shape tensors along a new leading axis.
template <typename Real> Tensor<Real> stack(const std::vector<Tensor<Real>> &parts);
// Truncates or zero-pads `axis` to `length`.
template <typename Real>
Tensor<Real> fit_axis(const Tensor<Real> &a, std::size_t axis, std::size_t length);
// Repeats every slice along `axis` `factor` times in place: [a, b] -> [a, a, b, b].
template <typename Real>
Tensor<Real> repeat_axis(const Tensor<Real> &a, std::size_t axis, std::size_t factor);
// Selects slices along axis 0.
template <typename Real>
Tensor<Real> gather_rows(const Tensor<Real> &a, const std::vector<std::size_t> &index);
// Copy of `base` with slices `index` along axis 0 replaced by `rows`.
template <typename Real>
Tensor<Real> scatter_rows(const Tensor<Real> &base,
                          const std::vector<std::size_t> &index,
                          const Tensor<Real> &rows);

// ---- neural network --------------------------------------------------------

// Numerically stabilized by subtracting the per-slice maximum.
template <typename Real> Tensor<Real> softmax(const Tensor<Real> &x, int axis);

// Normalizes the last axis, then applies gamma/beta. eps must be positive.
template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real> &x, const Tensor<Real> &gamma,
                        const Tensor<Real> &beta, Real eps);

// x [c_in, T] or [B, c_in, T]; kernels [c_out, c_in, L] -> [(B,) c_out, T']
// with T' = (T - L) / stride + 1. Cross-correlation, no padding.
template <typename Real>
Tensor<Real> conv1d(const Tensor<Real> &x, const Tensor<Real> &kernels,
                    std::size_t stride);

// x [F, T'] or [B, F, T']; kernels [F, C, L] -> [(B,) C, (T' - 1) * stride + L]
template <typename Real>
Tensor<Real> conv_transpose1d(const Tensor<Real> &x, const Tensor<Real> &kernels,
                              std::size_t stride);

// Dual-path segmentation geometry. The sequence is padded by `hop` frames on
// the front and by at least `hop` frames on the back, so every input frame
// lies in exactly two chunks (chunk_size == 2 * hop).
struct ChunkLayout {
  std::size_t length = 0;
  std::size_t chunk_size = 0;
  std::size_t hop = 0;
  std::size_t n_chunks = 0;
};
ChunkLayout chunk_layout(std::size_t length, std::size_t chunk_size,
                         std::size_t hop);

// x [G, T, d] -> [G, n_chunks, chunk_size, d]
template <typename Real>
Tensor<Real> segment_chunks(const Tensor<Real> &x, std::size_t chunk_size,
                            std::size_t hop);
// Overlap-add inverse of segment_chunks, normalized by chunk coverage.
template <typename Real>
Tensor<Real> merge_chunks(const Tensor<Real> &chunks, const ChunkLayout &layout);

}  // namespace avse::core
