// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/core/kernels.h"
#include "avse/core/ops.h"
#include "avse/error.h"

namespace avse::core {

using kernels::Trans;

template <typename Real>
Tensor<Real> matmul(const Tensor<Real> &a, const Tensor<Real> &b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    fail(ErrorCode::kDimension, "matmul: cannot multiply " +
                                    shape_str(a.shape()) + " by " +
                                    shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<Real> out(m * n);
  kernels::gemm(Trans::kNo, Trans::kNo, m, n, k, a.data().data(),
                b.data().data(), out.data(), false);
  return make_result<Real>(
      "matmul", {m, n}, std::move(out), {a, b}, [m, n, k](Node<Real> &node) {
        const Real *g = node.grad.data();
        const Real *va = node.parents[0]->value.data();
        const Real *vb = node.parents[1]->value.data();
        if (auto *ga = parent_grad(node, 0)) {
          kernels::gemm(Trans::kNo, Trans::kYes, m, k, n, g, vb, ga->data(),
                        true);
        }
        if (auto *gb = parent_grad(node, 1)) {
          kernels::gemm(Trans::kYes, Trans::kNo, k, n, m, va, g, gb->data(),
                        true);
        }
      });
}

template <typename Real>
Tensor<Real> bmm(const Tensor<Real> &a, const Tensor<Real> &b,
                 bool transpose_b) {
  const bool ok = a.rank() == 3 && b.rank() == 3 && a.dim(0) == b.dim(0) &&
                  a.dim(2) == (transpose_b ? b.dim(2) : b.dim(1));
  if (!ok) {
    fail(ErrorCode::kDimension, "bmm: cannot multiply " + shape_str(a.shape()) +
                                    " by " + shape_str(b.shape()) +
                                    (transpose_b ? " (transposed)" : ""));
  }
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2);
  const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
  const Trans tb = transpose_b ? Trans::kYes : Trans::kNo;
  std::vector<Real> out(batch * m * n);
  kernels::batched_gemm(Trans::kNo, tb, batch, m, n, k, a.data().data(),
                        b.data().data(), out.data(), false);
  return make_result<Real>(
      "bmm", {batch, m, n}, std::move(out), {a, b},
      [batch, m, n, k, transpose_b](Node<Real> &node) {
        const Real *g = node.grad.data();
        const Real *va = node.parents[0]->value.data();
        const Real *vb = node.parents[1]->value.data();
        if (auto *ga = parent_grad(node, 0)) {
          // dA = G * op(B)^T
          kernels::batched_gemm(Trans::kNo, transpose_b ? Trans::kNo : Trans::kYes,
                                batch, m, k, n, g, vb, ga->data(), true);
        }
        if (auto *gb = parent_grad(node, 1)) {
          if (transpose_b) {
            // B is [n, k]: dB = G^T * A
            kernels::batched_gemm(Trans::kYes, Trans::kNo, batch, n, k, m, g,
                                  va, gb->data(), true);
          } else {
            kernels::batched_gemm(Trans::kYes, Trans::kNo, batch, k, n, m, va,
                                  g, gb->data(), true);
          }
        }
      });
}

template <typename Real>
Tensor<Real> affine(const Tensor<Real> &x, const Tensor<Real> &w,
                    const Tensor<Real> &bias) {
  if (w.rank() != 2 || x.shape().back() != w.dim(0)) {
    fail(ErrorCode::kDimension, "affine: input " + shape_str(x.shape()) +
                                    " does not match weight " +
                                    shape_str(w.shape()));
  }
  const std::size_t in = w.dim(0), out_dim = w.dim(1);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_dim)) {
    fail(ErrorCode::kDimension, "affine: bias " + shape_str(bias.shape()) +
                                    " does not match weight " +
                                    shape_str(w.shape()));
  }
  const std::size_t rows = x.size() / in;
  std::vector<Real> out(rows * out_dim);
  kernels::gemm(Trans::kNo, Trans::kNo, rows, out_dim, in, x.data().data(),
                w.data().data(), out.data(), false);
  if (bias.defined()) {
    kernels::add_row_bias(rows, out_dim, bias.data().data(), out.data());
  }
  Shape shape = x.shape();
  shape.back() = out_dim;
  std::vector<Tensor<Real>> inputs{x, w};
  if (bias.defined()) inputs.push_back(bias);
  return make_result<Real>(
      "affine", std::move(shape), std::move(out), inputs,
      [rows, in, out_dim](Node<Real> &node) {
        const Real *g = node.grad.data();
        const Real *vx = node.parents[0]->value.data();
        const Real *vw = node.parents[1]->value.data();
        if (auto *gx = parent_grad(node, 0)) {
          kernels::gemm(Trans::kNo, Trans::kYes, rows, in, out_dim, g, vw,
                        gx->data(), true);
        }
        if (auto *gw = parent_grad(node, 1)) {
          kernels::gemm(Trans::kYes, Trans::kNo, in, out_dim, rows, vx, g,
                        gw->data(), true);
        }
        if (node.parents.size() > 2) {
          if (auto *gb = parent_grad(node, 2)) {
            kernels::column_sums(rows, out_dim, g, gb->data(), true);
          }
        }
      });
}

#define AVSE_INSTANTIATE(Real)                                                \
  template Tensor<Real> matmul(const Tensor<Real> &, const Tensor<Real> &);   \
  template Tensor<Real> bmm(const Tensor<Real> &, const Tensor<Real> &, bool); \
  template Tensor<Real> affine(const Tensor<Real> &, const Tensor<Real> &,    \
                               const Tensor<Real> &);

AVSE_INSTANTIATE(float)
AVSE_INSTANTIATE(double)

}  // namespace avse::core
