// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <numeric>

#include "avse/core/ops.h"
#include "avse/error.h"

namespace avse::core {

namespace {

Shape permuted_shape(const Shape &shape, const std::vector<std::size_t> &perm) {
  Shape out(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out[i] = shape[perm[i]];
  return out;
}

// dst[permuted index] (+)= src[index]: dst axis i is src axis perm[i].
template <typename Real>
void permute_copy(const Real *src, const Shape &shape,
                  const std::vector<std::size_t> &perm, Real *dst,
                  bool accumulate) {
  const std::size_t rank = shape.size();
  std::vector<std::size_t> src_stride(rank, 1);
  for (std::size_t i = rank - 1; i > 0; --i) {
    src_stride[i - 1] = src_stride[i] * shape[i];
  }
  const Shape out_shape = permuted_shape(shape, perm);
  // Innermost output axis stays contiguous in src: copy whole runs.
  const bool last_fixed = perm.back() == rank - 1;
  const std::size_t run = last_fixed ? shape.back() : 1;
  const std::size_t outer_rank = last_fixed ? rank - 1 : rank;
  std::vector<std::size_t> stride(outer_rank);
  for (std::size_t i = 0; i < outer_rank; ++i) stride[i] = src_stride[perm[i]];

  std::vector<std::size_t> idx(outer_rank, 0);
  const std::size_t total = numel(shape) / run;
  std::size_t offset = 0;
  for (std::size_t n = 0; n < total; ++n) {
    Real *d = dst + n * run;
    const Real *s = src + offset;
    if (accumulate) {
      for (std::size_t j = 0; j < run; ++j) d[j] += s[j];
    } else {
      std::copy(s, s + run, d);
    }
    for (std::size_t ax = outer_rank; ax-- > 0;) {
      offset += stride[ax];
      if (++idx[ax] < out_shape[ax]) break;
      offset -= stride[ax] * out_shape[ax];
      idx[ax] = 0;
    }
  }
}

// Splits a tensor shape around `axis` into (outer, axis length, inner).
struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_at(const Shape &shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

template <typename Real>
Tensor<Real> reshape(const Tensor<Real> &a, const Shape &shape) {
  if (numel(shape) != a.size()) {
    fail(ErrorCode::kDimension, "reshape: cannot view " + shape_str(a.shape()) +
                                    " as " + shape_str(shape));
  }
  std::vector<Real> out(a.data().begin(), a.data().end());
  return make_result<Real>("reshape", shape, std::move(out), {a},
                           [](Node<Real> &node) {
                             auto *ga = parent_grad(node, 0);
                             if (!ga) return;
                             for (std::size_t i = 0; i < ga->size(); ++i) {
                               (*ga)[i] += node.grad[i];
                             }
                           });
}

template <typename Real>
Tensor<Real> permute(const Tensor<Real> &a,
                     const std::vector<std::size_t> &perm) {
  std::vector<std::size_t> check(perm);
  std::sort(check.begin(), check.end());
  std::vector<std::size_t> iota(a.rank());
  std::iota(iota.begin(), iota.end(), 0);
  if (check != iota) {
    fail(ErrorCode::kDimension,
         "permute: invalid permutation for shape " + shape_str(a.shape()));
  }
  std::vector<Real> out(a.size());
  permute_copy(a.data().data(), a.shape(), perm, out.data(), false);
  std::vector<std::size_t> inverse(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = i;
  Shape out_shape = permuted_shape(a.shape(), perm);
  return make_result<Real>(
      "permute", out_shape, std::move(out), {a},
      [inverse, out_shape](Node<Real> &node) {
        auto *ga = parent_grad(node, 0);
        if (!ga) return;
        permute_copy(node.grad.data(), out_shape, inverse, ga->data(), true);
      });
}

template <typename Real>
Tensor<Real> concat_last(const std::vector<Tensor<Real>> &parts) {
  if (parts.empty()) fail(ErrorCode::kContract, "concat_last: no inputs");
  const Shape &first = parts[0].shape();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto &p : parts) {
    if (p.rank() != first.size() ||
        !std::equal(first.begin(), first.end() - 1, p.shape().begin())) {
      fail(ErrorCode::kDimension, "concat_last: " + shape_str(first) +
                                      " vs " + shape_str(p.shape()));
    }
    widths.push_back(p.shape().back());
    total += p.shape().back();
  }
  const std::size_t rows = parts[0].size() / widths[0];
  std::vector<Real> out(rows * total);
  std::size_t col = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Real *src = parts[i].data().data();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(src + r * widths[i], src + (r + 1) * widths[i],
                out.data() + r * total + col);
    }
    col += widths[i];
  }
  Shape shape = first;
  shape.back() = total;
  return make_result<Real>(
      "concat_last", std::move(shape), std::move(out), parts,
      [widths, rows, total](Node<Real> &node) {
        std::size_t col = 0;
        for (std::size_t i = 0; i < widths.size(); ++i) {
          if (auto *gp = parent_grad(node, i)) {
            for (std::size_t r = 0; r < rows; ++r) {
              const Real *g = node.grad.data() + r * total + col;
              Real *d = gp->data() + r * widths[i];
              for (std::size_t j = 0; j < widths[i]; ++j) d[j] += g[j];
            }
          }
          col += widths[i];
        }
      });
}

template <typename Real>
Tensor<Real> stack(const std::vector<Tensor<Real>> &parts) {
  if (parts.empty()) fail(ErrorCode::kContract, "stack: no inputs");
  const Shape &first = parts[0].shape();
  const std::size_t each = parts[0].size();
  std::vector<Real> out;
  out.reserve(each * parts.size());
  for (const auto &p : parts) {
    if (p.shape() != first) {
      fail(ErrorCode::kDimension,
           "stack: " + shape_str(first) + " vs " + shape_str(p.shape()));
    }
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  Shape shape{parts.size()};
  shape.insert(shape.end(), first.begin(), first.end());
  return make_result<Real>("stack", std::move(shape), std::move(out), parts,
                           [each](Node<Real> &node) {
                             for (std::size_t i = 0; i < node.parents.size();
                                  ++i) {
                               auto *gp = parent_grad(node, i);
                               if (!gp) continue;
                               const Real *g = node.grad.data() + i * each;
                               for (std::size_t j = 0; j < each; ++j) {
                                 (*gp)[j] += g[j];
                               }
                             }
                           });
}

template <typename Real>
Tensor<Real> fit_axis(const Tensor<Real> &a, std::size_t axis,
                      std::size_t length) {
  if (axis >= a.rank() || length == 0) {
    fail(ErrorCode::kDimension, "fit_axis: bad axis/length for " +
                                    shape_str(a.shape()));
  }
  const AxisSplit s = split_at(a.shape(), axis);
  const std::size_t keep = std::min(length, s.len);
  std::vector<Real> out(s.outer * length * s.inner, Real(0));
  const Real *src = a.data().data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy(src + o * s.len * s.inner, src + (o * s.len + keep) * s.inner,
              out.data() + o * length * s.inner);
  }
  Shape shape = a.shape();
  shape[axis] = length;
  return make_result<Real>(
      "fit_axis", std::move(shape), std::move(out), {a},
      [s, keep, length](Node<Real> &node) {
        auto *ga = parent_grad(node, 0);
        if (!ga) return;
        for (std::size_t o = 0; o < s.outer; ++o) {
          const Real *g = node.grad.data() + o * length * s.inner;
          Real *d = ga->data() + o * s.len * s.inner;
          for (std::size_t j = 0; j < keep * s.inner; ++j) d[j] += g[j];
        }
      });
}

template <typename Real>
Tensor<Real> repeat_axis(const Tensor<Real> &a, std::size_t axis,
                         std::size_t factor) {
  if (axis >= a.rank() || factor == 0) {
    fail(ErrorCode::kDimension, "repeat_axis: bad axis/factor for " +
                                    shape_str(a.shape()));
  }
  const AxisSplit s = split_at(a.shape(), axis);
  std::vector<Real> out(a.size() * factor);
  const Real *src = a.data().data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t t = 0; t < s.len; ++t) {
      const Real *row = src + (o * s.len + t) * s.inner;
      for (std::size_t r = 0; r < factor; ++r) {
        std::copy(row, row + s.inner,
                  out.data() + ((o * s.len + t) * factor + r) * s.inner);
      }
    }
  }
  Shape shape = a.shape();
  shape[axis] *= factor;
  return make_result<Real>(
      "repeat_axis", std::move(shape), std::move(out), {a},
      [s, factor](Node<Real> &node) {
        auto *ga = parent_grad(node, 0);
        if (!ga) return;
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t t = 0; t < s.len; ++t) {
            Real *d = ga->data() + (o * s.len + t) * s.inner;
            for (std::size_t r = 0; r < factor; ++r) {
              const Real *g =
                  node.grad.data() + ((o * s.len + t) * factor + r) * s.inner;
              for (std::size_t j = 0; j < s.inner; ++j) d[j] += g[j];
            }
          }
        }
      });
}

template <typename Real>
Tensor<Real> gather_rows(const Tensor<Real> &a,
                         const std::vector<std::size_t> &index) {
  if (index.empty()) fail(ErrorCode::kContract, "gather_rows: empty index");
  const std::size_t rows = a.dim(0);
  const std::size_t inner = a.size() / rows;
  std::vector<Real> out(index.size() * inner);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows) {
      fail(ErrorCode::kDimension, "gather_rows: index " +
                                      std::to_string(index[i]) +
                                      " out of range for " +
                                      shape_str(a.shape()));
    }
    const Real *src = a.data().data() + index[i] * inner;
    std::copy(src, src + inner, out.data() + i * inner);
  }
  Shape shape = a.shape();
  shape[0] = index.size();
  return make_result<Real>("gather_rows", std::move(shape), std::move(out), {a},
                           [index, inner](Node<Real> &node) {
                             auto *ga = parent_grad(node, 0);
                             if (!ga) return;
                             for (std::size_t i = 0; i < index.size(); ++i) {
                               const Real *g = node.grad.data() + i * inner;
                               Real *d = ga->data() + index[i] * inner;
                               for (std::size_t j = 0; j < inner; ++j) {
                                 d[j] += g[j];
                               }
                             }
                           });
}

template <typename Real>
Tensor<Real> scatter_rows(const Tensor<Real> &base,
                          const std::vector<std::size_t> &index,
                          const Tensor<Real> &rows) {
  const std::size_t n = base.dim(0);
  const std::size_t inner = base.size() / n;
  if (rows.dim(0) != index.size() || rows.size() != index.size() * inner) {
    fail(ErrorCode::kDimension, "scatter_rows: rows " +
                                    shape_str(rows.shape()) +
                                    " do not fit base " +
                                    shape_str(base.shape()));
  }
  std::vector<char> replaced(n, 0);
  std::vector<Real> out(base.data().begin(), base.data().end());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= n || replaced[index[i]]) {
      fail(ErrorCode::kContract, "scatter_rows: index " +
                                     std::to_string(index[i]) +
                                     " out of range or repeated");
    }
    replaced[index[i]] = 1;
    const Real *src = rows.data().data() + i * inner;
    std::copy(src, src + inner, out.data() + index[i] * inner);
  }
  return make_result<Real>(
      "scatter_rows", base.shape(), std::move(out), {base, rows},
      [index, replaced, inner](Node<Real> &node) {
        const Real *g = node.grad.data();
        if (auto *gb = parent_grad(node, 0)) {
          for (std::size_t r = 0; r < replaced.size(); ++r) {
            if (replaced[r]) continue;
            for (std::size_t j = 0; j < inner; ++j) {
              (*gb)[r * inner + j] += g[r * inner + j];
            }
          }
        }
        if (auto *gr = parent_grad(node, 1)) {
          for (std::size_t i = 0; i < index.size(); ++i) {
            for (std::size_t j = 0; j < inner; ++j) {
              (*gr)[i * inner + j] += g[index[i] * inner + j];
            }
          }
        }
      });
}

#define AVSE_INSTANTIATE(Real)                                                 \
  template Tensor<Real> reshape(const Tensor<Real> &, const Shape &);          \
  template Tensor<Real> permute(const Tensor<Real> &,                          \
                                const std::vector<std::size_t> &);             \
  template Tensor<Real> concat_last(const std::vector<Tensor<Real>> &);        \
  template Tensor<Real> stack(const std::vector<Tensor<Real>> &);              \
  template Tensor<Real> fit_axis(const Tensor<Real> &, std::size_t,            \
                                 std::size_t);                                 \
  template Tensor<Real> repeat_axis(const Tensor<Real> &, std::size_t,         \
                                    std::size_t);                              \
  template Tensor<Real> gather_rows(const Tensor<Real> &,                      \
                                    const std::vector<std::size_t> &);         \
  template Tensor<Real> scatter_rows(const Tensor<Real> &,                     \
                                     const std::vector<std::size_t> &,         \
                                     const Tensor<Real> &);

AVSE_INSTANTIATE(float)
AVSE_INSTANTIATE(double)

}  // namespace avse::core
