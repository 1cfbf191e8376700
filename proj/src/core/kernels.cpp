// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/core/kernels.h"

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <vector>

namespace avse::core::kernels {

namespace {

// Below this many multiply-adds the fork/join cost dominates.
constexpr std::size_t kParallelWork = 1 << 15;

using isize = std::ptrdiff_t;

// R x W tile of C += A * B accumulated in registers over the full k loop.
template <typename Real, std::size_t R, std::size_t W>
inline void gemm_tile(std::size_t k, const Real *a, std::size_t rs,
                      std::size_t cs, const Real *b, std::size_t n, Real *c) {
  Real acc[R][W] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const Real *__restrict brow = b + p * n;
    for (std::size_t r = 0; r < R; ++r) {
      const Real ar = a[r * rs + p * cs];
#pragma omp simd
      for (std::size_t j = 0; j < W; ++j) acc[r][j] += ar * brow[j];
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
#pragma omp simd
    for (std::size_t j = 0; j < W; ++j) c[r * n + j] += acc[r][j];
  }
}

// Rows [i0, i1) and columns [j0, j1) of C += A * B, streaming rows of B.
template <typename Real>
void gemm_edge(std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1,
               std::size_t n, std::size_t k, const Real *a, std::size_t rs,
               std::size_t cs, const Real *b, Real *c) {
  for (std::size_t i = i0; i < i1; ++i) {
    Real *__restrict ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real ai = a[i * rs + p * cs];
      const Real *__restrict brow = b + p * n;
#pragma omp simd
      for (std::size_t j = j0; j < j1; ++j) ci[j] += ai * brow[j];
    }
  }
}

// Rows [i0, i1) of C += A * B where A(i, p) = a[i * rs + p * cs] and B is a
// row-major [k, n] matrix.
template <typename Real>
void gemm_rows(std::size_t i0, std::size_t i1, std::size_t n, std::size_t k,
               const Real *a, std::size_t rs, std::size_t cs, const Real *b,
               Real *c) {
  constexpr std::size_t kRows = 4;
  constexpr std::size_t kWidth = 128 / sizeof(Real);
  // Depth block sized so that a [kDepth, n] panel of B stays cache resident.
  constexpr std::size_t kDepth = 128;
  const std::size_t n_full = n - n % kWidth;
  for (std::size_t p0 = 0; p0 < k; p0 += kDepth) {
    const std::size_t kb = std::min(kDepth, k - p0);
    const Real *ap = a + p0 * cs;
    const Real *bp = b + p0 * n;
    std::size_t i = i0;
    for (; i + kRows <= i1; i += kRows) {
      for (std::size_t j = 0; j < n_full; j += kWidth) {
        gemm_tile<Real, kRows, kWidth>(kb, ap + i * rs, rs, cs, bp + j, n, c + i * n + j);
      }
    }
    for (; i < i1; ++i) {
      for (std::size_t j = 0; j < n_full; j += kWidth) {
        gemm_tile<Real, 1, kWidth>(kb, ap + i * rs, rs, cs, bp + j, n, c + i * n + j);
      }
    }
    if (n_full < n) gemm_edge(i0, i1, n_full, n, n, kb, ap, rs, cs, bp, c);
  }
}

template <typename Real>
void transpose(std::size_t rows, std::size_t cols, const Real *src,
               Real *dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
}

template <typename Real>
void gemm_serial_blocked(Trans ta, std::size_t m, std::size_t n, std::size_t k,
                         const Real *a, const Real *b_nn, Real *c) {
  const std::size_t rs = ta == Trans::kNo ? k : 1;
  const std::size_t cs = ta == Trans::kNo ? 1 : m;
  gemm_rows(0, m, n, k, a, rs, cs, b_nn, c);
}

}  // namespace

template <typename Real>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const Real *a, const Real *b, Real *c, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, Real(0));
  if (m == 0 || n == 0 || k == 0) return;

  std::vector<Real> b_t;
  const Real *b_nn = b;
  if (tb == Trans::kYes) {
    b_t.resize(k * n);
    transpose(n, k, b, b_t.data());
    b_nn = b_t.data();
  }
  const std::size_t rs = ta == Trans::kNo ? k : 1;
  const std::size_t cs = ta == Trans::kNo ? 1 : m;

  const isize blocks = static_cast<isize>((m + 3) / 4);
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (isize blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * 4;
    const std::size_t i1 = std::min(m, i0 + 4);
    gemm_rows(i0, i1, n, k, a, rs, cs, b_nn, c);
  }
}

template <typename Real>
void batched_gemm(Trans ta, Trans tb, std::size_t batch, std::size_t m,
                  std::size_t n, std::size_t k, const Real *a, const Real *b,
                  Real *c, bool accumulate) {
  const isize nb = static_cast<isize>(batch);
#pragma omp parallel for schedule(static) if (batch * m * n * k > kParallelWork)
  for (isize i = 0; i < nb; ++i) {
    const Real *ai = a + i * m * k;
    const Real *bi = b + i * k * n;
    Real *ci = c + i * m * n;
    if (!accumulate) std::fill(ci, ci + m * n, Real(0));
    if (tb == Trans::kNo) {
      gemm_serial_blocked(ta, m, n, k, ai, bi, ci);
    } else {
      // Small per-item matrices: dot-product form avoids a transpose buffer.
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t col = 0; col < n; ++col) {
          Real acc = 0;
          for (std::size_t p = 0; p < k; ++p) {
            const Real av = ta == Trans::kNo ? ai[r * k + p] : ai[p * m + r];
            acc += av * bi[col * k + p];
          }
          ci[r * n + col] += acc;
        }
      }
    }
  }
}

template <typename Real>
void conv1d(std::size_t batch, std::size_t c_in, std::size_t t_in,
            std::size_t c_out, std::size_t kernel, std::size_t stride,
            const Real *x, const Real *w, Real *out) {
  const std::size_t frames = (t_in - kernel) / stride + 1;
  const std::size_t span = c_in * kernel;
  std::vector<Real> cols(span * frames);
  for (std::size_t b = 0; b < batch; ++b) {
    const Real *xb = x + b * c_in * t_in;
    // cols[(c * kernel + l), t] = x[c, t * stride + l]
    for (std::size_t c = 0; c < c_in; ++c) {
      for (std::size_t l = 0; l < kernel; ++l) {
        Real *row = cols.data() + (c * kernel + l) * frames;
        const Real *src = xb + c * t_in + l;
        for (std::size_t t = 0; t < frames; ++t) row[t] = src[t * stride];
      }
    }
    gemm(Trans::kNo, Trans::kNo, c_out, frames, span, w, cols.data(),
         out + b * c_out * frames, false);
  }
}

template <typename Real>
void conv_transpose1d(std::size_t batch, std::size_t channels,
                      std::size_t frames, std::size_t filters,
                      std::size_t kernel, std::size_t stride, const Real *x,
                      const Real *w, Real *out) {
  const std::size_t out_len = (frames - 1) * stride + kernel;
  const std::size_t span = channels * kernel;
  std::vector<Real> segs(frames * span);
  for (std::size_t b = 0; b < batch; ++b) {
    // segs[t, c * kernel + l] = sum_o x[o, t] * w[o, c, l]
    gemm(Trans::kYes, Trans::kNo, frames, span, filters, x + b * filters * frames,
         w, segs.data(), false);
    Real *ob = out + b * channels * out_len;
    std::fill(ob, ob + channels * out_len, Real(0));
    for (std::size_t t = 0; t < frames; ++t) {
      const Real *seg = segs.data() + t * span;
      for (std::size_t c = 0; c < channels; ++c) {
        Real *dst = ob + c * out_len + t * stride;
        const Real *src = seg + c * kernel;
        for (std::size_t l = 0; l < kernel; ++l) dst[l] += src[l];
      }
    }
  }
}

template <typename Real>
void add_row_bias(std::size_t rows, std::size_t cols, const Real *bias,
                  Real *y) {
  const isize nr = static_cast<isize>(rows);
#pragma omp parallel for schedule(static) if (rows * cols > kParallelWork)
  for (isize r = 0; r < nr; ++r) {
    Real *row = y + r * cols;
#pragma omp simd
    for (std::size_t c = 0; c < cols; ++c) row[c] += bias[c];
  }
}

template <typename Real>
void column_sums(std::size_t rows, std::size_t cols, const Real *y, Real *out,
                 bool accumulate) {
  if (!accumulate) std::fill(out, out + cols, Real(0));
  for (std::size_t r = 0; r < rows; ++r) {
    const Real *row = y + r * cols;
#pragma omp simd
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c];
  }
}

namespace reference {

template <typename Real>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const Real *a, const Real *b, Real *c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real acc = accumulate ? c[i * n + j] : Real(0);
      for (std::size_t p = 0; p < k; ++p) {
        const Real av = ta == Trans::kNo ? a[i * k + p] : a[p * m + i];
        const Real bv = tb == Trans::kNo ? b[p * n + j] : b[j * k + p];
        acc += av * bv;
      }
      c[i * n + j] = acc;
    }
  }
}

template <typename Real>
void conv1d(std::size_t batch, std::size_t c_in, std::size_t t_in,
            std::size_t c_out, std::size_t kernel, std::size_t stride,
            const Real *x, const Real *w, Real *out) {
  const std::size_t frames = (t_in - kernel) / stride + 1;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < c_out; ++o) {
      for (std::size_t t = 0; t < frames; ++t) {
        Real acc = 0;
        for (std::size_t c = 0; c < c_in; ++c) {
          for (std::size_t l = 0; l < kernel; ++l) {
            acc += w[(o * c_in + c) * kernel + l] *
                   x[(b * c_in + c) * t_in + t * stride + l];
          }
        }
        out[(b * c_out + o) * frames + t] = acc;
      }
    }
  }
}

template <typename Real>
void conv_transpose1d(std::size_t batch, std::size_t channels,
                      std::size_t frames, std::size_t filters,
                      std::size_t kernel, std::size_t stride, const Real *x,
                      const Real *w, Real *out) {
  const std::size_t out_len = (frames - 1) * stride + kernel;
  std::fill(out, out + batch * channels * out_len, Real(0));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < filters; ++o) {
      for (std::size_t t = 0; t < frames; ++t) {
        const Real xv = x[(b * filters + o) * frames + t];
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t l = 0; l < kernel; ++l) {
            out[(b * channels + c) * out_len + t * stride + l] +=
                xv * w[(o * channels + c) * kernel + l];
          }
        }
      }
    }
  }
}

}  // namespace reference

#define AVSE_INSTANTIATE(Real)                                                 \
  template void gemm<Real>(Trans, Trans, std::size_t, std::size_t, std::size_t, \
                           const Real *, const Real *, Real *, bool);          \
  template void batched_gemm<Real>(Trans, Trans, std::size_t, std::size_t,     \
                                   std::size_t, std::size_t, const Real *,     \
                                   const Real *, Real *, bool);                \
  template void conv1d<Real>(std::size_t, std::size_t, std::size_t,            \
                             std::size_t, std::size_t, std::size_t,            \
                             const Real *, const Real *, Real *);              \
  template void conv_transpose1d<Real>(std::size_t, std::size_t, std::size_t,  \
                                       std::size_t, std::size_t, std::size_t,  \
                                       const Real *, const Real *, Real *);    \
  template void add_row_bias<Real>(std::size_t, std::size_t, const Real *,     \
                                   Real *);                                    \
  template void column_sums<Real>(std::size_t, std::size_t, const Real *,      \
                                  Real *, bool);                               \
  template void reference::gemm<Real>(Trans, Trans, std::size_t, std::size_t,  \
                                      std::size_t, const Real *, const Real *, \
                                      Real *, bool);                           \
  template void reference::conv1d<Real>(std::size_t, std::size_t, std::size_t, \
                                        std::size_t, std::size_t, std::size_t, \
                                        const Real *, const Real *, Real *);   \
  template void reference::conv_transpose1d<Real>(                             \
      std::size_t, std::size_t, std::size_t, std::size_t, std::size_t,         \
      std::size_t, const Real *, const Real *, Real *);

AVSE_INSTANTIATE(float)
AVSE_INSTANTIATE(double)

}  // namespace avse::core::kernels
