// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>
#include <limits>

#include "avse/core/kernels.h"
#include "avse/core/ops.h"
#include "avse/error.h"

namespace avse::core {

using kernels::Trans;

template <typename Real>
Tensor<Real> softmax(const Tensor<Real> &x, int axis) {
  const int rank = static_cast<int>(x.rank());
  const int ax = axis < 0 ? axis + rank : axis;
  if (ax < 0 || ax >= rank) {
    fail(ErrorCode::kDimension, "softmax: axis " + std::to_string(axis) +
                                    " invalid for " + shape_str(x.shape()));
  }
  std::size_t outer = 1, inner = 1;
  const std::size_t len = x.dim(ax);
  for (int i = 0; i < ax; ++i) outer *= x.dim(i);
  for (int i = ax + 1; i < rank; ++i) inner *= x.dim(i);

  const Real *in = x.data().data();
  std::vector<Real> out(x.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      Real mx = -std::numeric_limits<Real>::infinity();
      for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, in[base + k * inner]);
      Real total = 0;
      for (std::size_t k = 0; k < len; ++k) {
        const Real e = std::exp(in[base + k * inner] - mx);
        out[base + k * inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < len; ++k) out[base + k * inner] /= total;
    }
  }
  auto result = make_result<Real>("softmax", x.shape(), std::move(out), {x},
                                  nullptr);
  if (result.requires_grad()) {
    result.node()->backward = [outer, len, inner](Node<Real> &node) {
      auto *gx = parent_grad(node, 0);
      if (!gx) return;
      const Real *y = node.value.data();
      const Real *g = node.grad.data();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
          const std::size_t base = o * len * inner + i;
          Real dot = 0;
          for (std::size_t k = 0; k < len; ++k) {
            dot += g[base + k * inner] * y[base + k * inner];
          }
          for (std::size_t k = 0; k < len; ++k) {
            const std::size_t j = base + k * inner;
            (*gx)[j] += y[j] * (g[j] - dot);
          }
        }
      }
    };
  }
  return result;
}

template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real> &x, const Tensor<Real> &gamma,
                        const Tensor<Real> &beta, Real eps) {
  if (!(eps > 0)) {
    fail(ErrorCode::kConfig, "layer_norm: eps must be positive");
  }
  const std::size_t n = x.shape().back();
  if (gamma.size() != n || beta.size() != n) {
    fail(ErrorCode::kDimension, "layer_norm: gamma/beta " +
                                    shape_str(gamma.shape()) + "/" +
                                    shape_str(beta.shape()) +
                                    " do not match input " +
                                    shape_str(x.shape()));
  }
  const std::size_t rows = x.size() / n;
  const Real *in = x.data().data();
  const Real *gm = gamma.data().data();
  const Real *bt = beta.data().data();
  std::vector<Real> out(x.size());
  std::vector<Real> xhat(x.size());
  std::vector<Real> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real *row = in + r * n;
    Real mu = 0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<Real>(n);
    Real var = 0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<Real>(n);
    const Real inv = Real(1) / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t j = 0; j < n; ++j) {
      const Real h = (row[j] - mu) * inv;
      xhat[r * n + j] = h;
      out[r * n + j] = gm[j] * h + bt[j];
    }
  }
  return make_result<Real>(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta},
      [rows, n, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Node<Real> &node) {
        const Real *g = node.grad.data();
        const Real *gm = node.parents[1]->value.data();
        if (auto *gx = parent_grad(node, 0)) {
          const Real inv_n = Real(1) / static_cast<Real>(n);
          for (std::size_t r = 0; r < rows; ++r) {
            Real sum_d = 0, sum_dh = 0;
            for (std::size_t j = 0; j < n; ++j) {
              const Real d = g[r * n + j] * gm[j];
              sum_d += d;
              sum_dh += d * xhat[r * n + j];
            }
            for (std::size_t j = 0; j < n; ++j) {
              const Real d = g[r * n + j] * gm[j];
              (*gx)[r * n + j] +=
                  inv_std[r] * (d - inv_n * sum_d - xhat[r * n + j] * inv_n * sum_dh);
            }
          }
        }
        if (auto *gg = parent_grad(node, 1)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < n; ++j) {
              (*gg)[j] += g[r * n + j] * xhat[r * n + j];
            }
          }
        }
        if (auto *gb = parent_grad(node, 2)) {
          kernels::column_sums(rows, n, g, gb->data(), true);
        }
      });
}

namespace {

// cols[(c * kernel + l), t] = x[c, t * stride + l]
template <typename Real>
void im2col(const Real *x, std::size_t channels, std::size_t len,
            std::size_t kernel, std::size_t stride, std::size_t frames,
            Real *cols) {
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t l = 0; l < kernel; ++l) {
      Real *row = cols + (c * kernel + l) * frames;
      const Real *src = x + c * len + l;
      for (std::size_t t = 0; t < frames; ++t) row[t] = src[t * stride];
    }
  }
}

}  // namespace

template <typename Real>
Tensor<Real> conv1d(const Tensor<Real> &x, const Tensor<Real> &kernels,
                    std::size_t stride) {
  const bool batched = x.rank() == 3;
  if ((x.rank() != 2 && !batched) || kernels.rank() != 3 ||
      x.dim(batched ? 1 : 0) != kernels.dim(1)) {
    fail(ErrorCode::kDimension, "conv1d: input " + shape_str(x.shape()) +
                                    " does not match kernels " +
                                    shape_str(kernels.shape()));
  }
  if (stride == 0) fail(ErrorCode::kConfig, "conv1d: stride must be >= 1");
  const std::size_t batch = batched ? x.dim(0) : 1;
  const std::size_t c_in = kernels.dim(1), c_out = kernels.dim(0);
  const std::size_t kernel = kernels.dim(2);
  const std::size_t len = x.shape().back();
  if (len < kernel) {
    fail(ErrorCode::kInputTooShort, "conv1d: input length " +
                                        std::to_string(len) +
                                        " shorter than kernel " +
                                        std::to_string(kernel));
  }
  const std::size_t frames = (len - kernel) / stride + 1;
  std::vector<Real> out(batch * c_out * frames);
  kernels::conv1d(batch, c_in, len, c_out, kernel, stride, x.data().data(),
                  kernels.data().data(), out.data());
  Shape shape = batched ? Shape{batch, c_out, frames} : Shape{c_out, frames};
  return make_result<Real>(
      "conv1d", std::move(shape), std::move(out), {x, kernels},
      [=](Node<Real> &node) {
        const Real *g = node.grad.data();
        const Real *vx = node.parents[0]->value.data();
        const Real *vw = node.parents[1]->value.data();
        if (auto *gx = parent_grad(node, 0)) {
          // The input gradient is the overlap-add of g through the kernels.
          const std::size_t span = (frames - 1) * stride + kernel;
          std::vector<Real> buf(c_in * span);
          for (std::size_t b = 0; b < batch; ++b) {
            kernels::conv_transpose1d<Real>(1, c_in, frames, c_out, kernel,
                                            stride, g + b * c_out * frames, vw,
                                            buf.data());
            for (std::size_t c = 0; c < c_in; ++c) {
              Real *dst = gx->data() + (b * c_in + c) * len;
              const Real *src = buf.data() + c * span;
              for (std::size_t t = 0; t < span; ++t) dst[t] += src[t];
            }
          }
        }
        if (auto *gw = parent_grad(node, 1)) {
          std::vector<Real> cols(c_in * kernel * frames);
          for (std::size_t b = 0; b < batch; ++b) {
            im2col(vx + b * c_in * len, c_in, len, kernel, stride, frames,
                   cols.data());
            kernels::gemm(Trans::kNo, Trans::kYes, c_out, c_in * kernel,
                          frames, g + b * c_out * frames, cols.data(),
                          gw->data(), true);
          }
        }
      });
}

template <typename Real>
Tensor<Real> conv_transpose1d(const Tensor<Real> &x,
                              const Tensor<Real> &kernels,
                              std::size_t stride) {
  const bool batched = x.rank() == 3;
  if ((x.rank() != 2 && !batched) || kernels.rank() != 3 ||
      x.dim(batched ? 1 : 0) != kernels.dim(0)) {
    fail(ErrorCode::kDimension, "conv_transpose1d: input " +
                                    shape_str(x.shape()) +
                                    " does not match kernels " +
                                    shape_str(kernels.shape()));
  }
  if (stride == 0) {
    fail(ErrorCode::kConfig, "conv_transpose1d: stride must be >= 1");
  }
  const std::size_t batch = batched ? x.dim(0) : 1;
  const std::size_t filters = kernels.dim(0), channels = kernels.dim(1);
  const std::size_t kernel = kernels.dim(2);
  const std::size_t frames = x.shape().back();
  const std::size_t out_len = (frames - 1) * stride + kernel;
  std::vector<Real> out(batch * channels * out_len);
  kernels::conv_transpose1d(batch, channels, frames, filters, kernel, stride,
                            x.data().data(), kernels.data().data(), out.data());
  Shape shape =
      batched ? Shape{batch, channels, out_len} : Shape{channels, out_len};
  return make_result<Real>(
      "conv_transpose1d", std::move(shape), std::move(out), {x, kernels},
      [=](Node<Real> &node) {
        const Real *g = node.grad.data();
        const Real *vx = node.parents[0]->value.data();
        const Real *vw = node.parents[1]->value.data();
        if (auto *gx = parent_grad(node, 0)) {
          std::vector<Real> buf(filters * frames);
          for (std::size_t b = 0; b < batch; ++b) {
            kernels::conv1d<Real>(1, channels, out_len, filters, kernel, stride,
                                  g + b * channels * out_len, vw, buf.data());
            Real *dst = gx->data() + b * filters * frames;
            for (std::size_t j = 0; j < buf.size(); ++j) dst[j] += buf[j];
          }
        }
        if (auto *gw = parent_grad(node, 1)) {
          std::vector<Real> cols(channels * kernel * frames);
          for (std::size_t b = 0; b < batch; ++b) {
            im2col(g + b * channels * out_len, channels, out_len, kernel,
                   stride, frames, cols.data());
            kernels::gemm(Trans::kNo, Trans::kYes, filters, channels * kernel,
                          frames, vx + b * filters * frames, cols.data(),
                          gw->data(), true);
          }
        }
      });
}

ChunkLayout chunk_layout(std::size_t length, std::size_t chunk_size,
                         std::size_t hop) {
  if (chunk_size == 0 || chunk_size % 2 != 0) {
    fail(ErrorCode::kConfig, "chunk_size must be a positive even number, got " +
                                 std::to_string(chunk_size));
  }
  if (hop * 2 != chunk_size) {
    fail(ErrorCode::kConfig, "chunk hop must be half the chunk size");
  }
  if (length == 0) fail(ErrorCode::kDimension, "cannot chunk an empty sequence");
  ChunkLayout layout;
  layout.length = length;
  layout.chunk_size = chunk_size;
  layout.hop = hop;
  layout.n_chunks = (length + hop - 1) / hop + 1;
  return layout;
}

namespace {

// For frame t of the original sequence, calls fn(chunk, offset_in_chunk) for
// both chunks that contain it.
template <typename Fn>
void for_each_cover(const ChunkLayout &layout, std::size_t t, Fn &&fn) {
  const std::size_t p = t + layout.hop;
  const std::size_t c1 = p / layout.hop;
  fn(c1 - 1, p - (c1 - 1) * layout.hop);
  fn(c1, p - c1 * layout.hop);
}

}  // namespace

template <typename Real>
Tensor<Real> segment_chunks(const Tensor<Real> &x, std::size_t chunk_size,
                            std::size_t hop) {
  if (x.rank() != 2 && x.rank() != 3) {
    fail(ErrorCode::kDimension,
         "segment_chunks: expected [T, d] or [G, T, d], got " +
             shape_str(x.shape()));
  }
  const bool grouped = x.rank() == 3;
  const std::size_t groups = grouped ? x.dim(0) : 1;
  const std::size_t len = x.dim(grouped ? 1 : 0);
  const std::size_t d = x.shape().back();
  const ChunkLayout layout = chunk_layout(len, chunk_size, hop);
  const std::size_t per_group = layout.n_chunks * chunk_size * d;
  std::vector<Real> out(groups * per_group, Real(0));
  const Real *in = x.data().data();
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t t = 0; t < len; ++t) {
      const Real *src = in + (g * len + t) * d;
      for_each_cover(layout, t, [&](std::size_t c, std::size_t k) {
        std::copy(src, src + d,
                  out.data() + g * per_group + (c * chunk_size + k) * d);
      });
    }
  }
  Shape shape = grouped ? Shape{groups, layout.n_chunks, chunk_size, d}
                        : Shape{layout.n_chunks, chunk_size, d};
  return make_result<Real>(
      "segment_chunks", std::move(shape), std::move(out), {x},
      [layout, groups, len, d, per_group](Node<Real> &node) {
        auto *gx = parent_grad(node, 0);
        if (!gx) return;
        for (std::size_t g = 0; g < groups; ++g) {
          for (std::size_t t = 0; t < len; ++t) {
            Real *dst = gx->data() + (g * len + t) * d;
            for_each_cover(layout, t, [&](std::size_t c, std::size_t k) {
              const Real *src = node.grad.data() + g * per_group +
                                (c * layout.chunk_size + k) * d;
              for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
            });
          }
        }
      });
}

template <typename Real>
Tensor<Real> merge_chunks(const Tensor<Real> &chunks, const ChunkLayout &layout) {
  const bool grouped = chunks.rank() == 4;
  if ((chunks.rank() != 3 && !grouped) ||
      chunks.dim(grouped ? 1 : 0) != layout.n_chunks ||
      chunks.dim(grouped ? 2 : 1) != layout.chunk_size) {
    fail(ErrorCode::kDimension, "merge_chunks: " + shape_str(chunks.shape()) +
                                    " does not match the chunk layout");
  }
  const std::size_t groups = grouped ? chunks.dim(0) : 1;
  const std::size_t len = layout.length;
  const std::size_t d = chunks.shape().back();
  const std::size_t per_group = layout.n_chunks * layout.chunk_size * d;
  std::vector<Real> out(groups * len * d, Real(0));
  const Real *in = chunks.data().data();
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t t = 0; t < len; ++t) {
      Real *dst = out.data() + (g * len + t) * d;
      for_each_cover(layout, t, [&](std::size_t c, std::size_t k) {
        const Real *src = in + g * per_group + (c * layout.chunk_size + k) * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
      });
      for (std::size_t j = 0; j < d; ++j) dst[j] *= Real(0.5);
    }
  }
  Shape shape = grouped ? Shape{groups, len, d} : Shape{len, d};
  return make_result<Real>(
      "merge_chunks", std::move(shape), std::move(out), {chunks},
      [layout, groups, len, d, per_group](Node<Real> &node) {
        auto *gc = parent_grad(node, 0);
        if (!gc) return;
        for (std::size_t g = 0; g < groups; ++g) {
          for (std::size_t t = 0; t < len; ++t) {
            const Real *src = node.grad.data() + (g * len + t) * d;
            for_each_cover(layout, t, [&](std::size_t c, std::size_t k) {
              Real *dst = gc->data() + g * per_group +
                          (c * layout.chunk_size + k) * d;
              for (std::size_t j = 0; j < d; ++j) dst[j] += Real(0.5) * src[j];
            });
          }
        }
      });
}

#define AVSE_INSTANTIATE(Real)                                                \
  template Tensor<Real> softmax(const Tensor<Real> &, int);                   \
  template Tensor<Real> layer_norm(const Tensor<Real> &, const Tensor<Real> &, \
                                   const Tensor<Real> &, Real);               \
  template Tensor<Real> conv1d(const Tensor<Real> &, const Tensor<Real> &,    \
                               std::size_t);                                  \
  template Tensor<Real> conv_transpose1d(const Tensor<Real> &,                \
                                         const Tensor<Real> &, std::size_t);  \
  template Tensor<Real> segment_chunks(const Tensor<Real> &, std::size_t,     \
                                       std::size_t);                          \
  template Tensor<Real> merge_chunks(const Tensor<Real> &, const ChunkLayout &);

AVSE_INSTANTIATE(float)
AVSE_INSTANTIATE(double)

}  // namespace avse::core
