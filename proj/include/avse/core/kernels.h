// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Hot loops behind the tensor ops. Each kernel has an OpenMP version used by
// the engine and a plain serial version in `reference` that tests and the
// benchmark compare against. All matrices are dense row-major.
//
// Parallel kernels partition output elements between threads and never
// reduce across threads, so results do not depend on the thread count.

#pragma once

#include <cstddef>

namespace avse::core::kernels {

enum class Trans { kNo, kYes };

// C[m,n] (+)= op(A) * op(B) where op(A) is [m,k] and op(B) is [k,n].
// A is stored [m,k] (kNo) or [k,m] (kYes); B is stored [k,n] or [n,k].
template <typename Real>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const Real *a, const Real *b, Real *c, bool accumulate);

// Batched C[i] (+)= op(A[i]) * op(B[i]) over `batch` contiguous matrices.
template <typename Real>
void batched_gemm(Trans ta, Trans tb, std::size_t batch, std::size_t m,
                  std::size_t n, std::size_t k, const Real *a, const Real *b,
                  Real *c, bool accumulate);

// out[b, o, t] = sum_{c,l} w[o, c, l] * x[b, c, t * stride + l]
template <typename Real>
void conv1d(std::size_t batch, std::size_t c_in, std::size_t t_in,
            std::size_t c_out, std::size_t kernel, std::size_t stride,
            const Real *x, const Real *w, Real *out);

// Overlap-add synthesis, the adjoint of conv1d with respect to its input.
// x is [batch, filters, frames], w is [filters, channels, kernel] and out is
// [batch, channels, (frames - 1) * stride + kernel] (overwritten):
// out[b, c, t * stride + l] += sum_o w[o, c, l] * x[b, o, t]
template <typename Real>
void conv_transpose1d(std::size_t batch, std::size_t channels,
                      std::size_t frames, std::size_t filters,
                      std::size_t kernel, std::size_t stride, const Real *x,
                      const Real *w, Real *out);

// y[r, :] += bias for every row r of a [rows, cols] matrix.
template <typename Real>
void add_row_bias(std::size_t rows, std::size_t cols, const Real *bias,
                  Real *y);

// out[c] (+)= sum_r y[r, c]
template <typename Real>
void column_sums(std::size_t rows, std::size_t cols, const Real *y, Real *out,
                 bool accumulate);

namespace reference {

template <typename Real>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const Real *a, const Real *b, Real *c, bool accumulate);

template <typename Real>
void conv1d(std::size_t batch, std::size_t c_in, std::size_t t_in,
            std::size_t c_out, std::size_t kernel, std::size_t stride,
            const Real *x, const Real *w, Real *out);

template <typename Real>
void conv_transpose1d(std::size_t batch, std::size_t channels,
                      std::size_t frames, std::size_t filters,
                      std::size_t kernel, std::size_t stride, const Real *x,
                      const Real *w, Real *out);

}  // namespace reference

}  // namespace avse::core::kernels
