// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>

#include "avse/core/ops.h"
#include "avse/error.h"

namespace avse::core {

namespace {

// Number of times b repeats over a under leading-axis expansion.
template <typename Real>
std::size_t expansion(const Tensor<Real> &a, const Tensor<Real> &b,
                      const char *op) {
  const Shape &sa = a.shape();
  const Shape &sb = b.shape();
  bool ok = sb.size() <= sa.size() &&
            std::equal(sb.rbegin(), sb.rend(), sa.rbegin());
  if (!ok) {
    fail(ErrorCode::kDimension, std::string(op) + ": shapes " + shape_str(sa) +
                                    " and " + shape_str(sb) +
                                    " are not compatible");
  }
  return a.size() / b.size();
}

template <typename Real, typename Fwd, typename Da, typename Db>
Tensor<Real> binary(const char *op, const Tensor<Real> &a,
                    const Tensor<Real> &b, Fwd fwd, Da da, Db db) {
  const std::size_t outer = expansion(a, b, op);
  const std::size_t inner = b.size();
  std::vector<Real> out(a.size());
  const Real *pa = a.data().data();
  const Real *pb = b.data().data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      out[o * inner + i] = fwd(pa[o * inner + i], pb[i]);
    }
  }
  return make_result<Real>(
      op, a.shape(), std::move(out), {a, b},
      [outer, inner, da, db](Node<Real> &node) {
        const auto &g = node.grad;
        const auto &va = node.parents[0]->value;
        const auto &vb = node.parents[1]->value;
        if (auto *ga = parent_grad(node, 0)) {
          for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
              const std::size_t k = o * inner + i;
              (*ga)[k] += g[k] * da(va[k], vb[i]);
            }
          }
        }
        if (auto *gb = parent_grad(node, 1)) {
          for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
              const std::size_t k = o * inner + i;
              (*gb)[i] += g[k] * db(va[k], vb[i]);
            }
          }
        }
      });
}

// Unary op whose derivative is expressed through input x and output y.
template <typename Real, typename Fwd, typename Deriv>
Tensor<Real> unary(const char *op, const Tensor<Real> &a, Fwd fwd,
                   Deriv deriv) {
  const auto in = a.data();
  std::vector<Real> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  auto result = make_result<Real>(op, a.shape(), std::move(out), {a}, nullptr);
  if (result.requires_grad()) {
    // The closure reads the output through the node it is attached to, so
    // it holds no extra reference.
    result.node()->backward = [deriv](Node<Real> &node) {
      auto *ga = parent_grad(node, 0);
      if (!ga) return;
      const auto &x = node.parents[0]->value;
      for (std::size_t i = 0; i < x.size(); ++i) {
        (*ga)[i] += node.grad[i] * deriv(x[i], node.value[i]);
      }
    };
  }
  return result;
}

}  // namespace

template <typename Real>
Tensor<Real> add(const Tensor<Real> &a, const Tensor<Real> &b) {
  return binary<Real>(
      "add", a, b, [](Real x, Real y) { return x + y; },
      [](Real, Real) { return Real(1); }, [](Real, Real) { return Real(1); });
}

template <typename Real>
Tensor<Real> sub(const Tensor<Real> &a, const Tensor<Real> &b) {
  return binary<Real>(
      "sub", a, b, [](Real x, Real y) { return x - y; },
      [](Real, Real) { return Real(1); }, [](Real, Real) { return Real(-1); });
}

template <typename Real>
Tensor<Real> mul(const Tensor<Real> &a, const Tensor<Real> &b) {
  return binary<Real>(
      "mul", a, b, [](Real x, Real y) { return x * y; },
      [](Real, Real y) { return y; }, [](Real x, Real) { return x; });
}

template <typename Real>
Tensor<Real> div(const Tensor<Real> &a, const Tensor<Real> &b) {
  return binary<Real>(
      "div", a, b, [](Real x, Real y) { return x / y; },
      [](Real, Real y) { return Real(1) / y; },
      [](Real x, Real y) { return -x / (y * y); });
}

template <typename Real>
Tensor<Real> add_scalar(const Tensor<Real> &a, Real s) {
  return unary<Real>(
      "add_scalar", a, [s](Real x) { return x + s; },
      [](Real, Real) { return Real(1); });
}

template <typename Real>
Tensor<Real> mul_scalar(const Tensor<Real> &a, Real s) {
  return unary<Real>(
      "mul_scalar", a, [s](Real x) { return x * s; },
      [s](Real, Real) { return s; });
}

template <typename Real>
Tensor<Real> relu(const Tensor<Real> &a) {
  return unary<Real>(
      "relu", a, [](Real x) { return x > 0 ? x : Real(0); },
      [](Real x, Real) { return x > 0 ? Real(1) : Real(0); });
}

template <typename Real>
Tensor<Real> sigmoid(const Tensor<Real> &a) {
  return unary<Real>(
      "sigmoid", a, [](Real x) { return Real(1) / (Real(1) + std::exp(-x)); },
      [](Real, Real y) { return y * (Real(1) - y); });
}

template <typename Real>
Tensor<Real> tanh(const Tensor<Real> &a) {
  return unary<Real>(
      "tanh", a, [](Real x) { return std::tanh(x); },
      [](Real, Real y) { return Real(1) - y * y; });
}

template <typename Real>
Tensor<Real> exp(const Tensor<Real> &a) {
  return unary<Real>(
      "exp", a, [](Real x) { return std::exp(x); },
      [](Real, Real y) { return y; });
}

template <typename Real>
Tensor<Real> log(const Tensor<Real> &a) {
  return unary<Real>(
      "log", a, [](Real x) { return std::log(x); },
      [](Real x, Real) { return Real(1) / x; });
}

template <typename Real>
Tensor<Real> sqrt(const Tensor<Real> &a) {
  return unary<Real>(
      "sqrt", a, [](Real x) { return std::sqrt(x); },
      [](Real, Real y) { return Real(0.5) / y; });
}

template <typename Real>
Tensor<Real> square(const Tensor<Real> &a) {
  return unary<Real>(
      "square", a, [](Real x) { return x * x; },
      [](Real x, Real) { return Real(2) * x; });
}

template <typename Real>
Tensor<Real> clamp(const Tensor<Real> &a, Real lo, Real hi) {
  return unary<Real>(
      "clamp", a, [lo, hi](Real x) { return std::clamp(x, lo, hi); },
      [lo, hi](Real x, Real) {
        return (x > lo && x < hi) ? Real(1) : Real(0);
      });
}

template <typename Real>
Tensor<Real> sum(const Tensor<Real> &a) {
  Real total = 0;
  for (Real v : a.data()) total += v;
  return make_result<Real>("sum", {1}, {total}, {a}, [](Node<Real> &node) {
    auto *ga = parent_grad(node, 0);
    if (!ga) return;
    const Real g = node.grad[0];
    for (auto &v : *ga) v += g;
  });
}

template <typename Real>
Tensor<Real> mean(const Tensor<Real> &a) {
  return mul_scalar(sum(a), Real(1) / static_cast<Real>(a.size()));
}

template <typename Real>
Tensor<Real> sum_last(const Tensor<Real> &a) {
  const std::size_t inner = a.shape().back();
  const std::size_t outer = a.size() / inner;
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  if (out_shape.empty()) out_shape = {1};
  std::vector<Real> out(outer, Real(0));
  const auto in = a.data();
  for (std::size_t o = 0; o < outer; ++o) {
    Real acc = 0;
    for (std::size_t i = 0; i < inner; ++i) acc += in[o * inner + i];
    out[o] = acc;
  }
  return make_result<Real>(
      "sum_last", std::move(out_shape), std::move(out), {a},
      [outer, inner](Node<Real> &node) {
        auto *ga = parent_grad(node, 0);
        if (!ga) return;
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < inner; ++i) {
            (*ga)[o * inner + i] += node.grad[o];
          }
        }
      });
}

#define AVSE_INSTANTIATE(Real)                                              \
  template Tensor<Real> add(const Tensor<Real> &, const Tensor<Real> &);    \
  template Tensor<Real> sub(const Tensor<Real> &, const Tensor<Real> &);    \
  template Tensor<Real> mul(const Tensor<Real> &, const Tensor<Real> &);    \
  template Tensor<Real> div(const Tensor<Real> &, const Tensor<Real> &);    \
  template Tensor<Real> add_scalar(const Tensor<Real> &, Real);             \
  template Tensor<Real> mul_scalar(const Tensor<Real> &, Real);             \
  template Tensor<Real> relu(const Tensor<Real> &);                         \
  template Tensor<Real> sigmoid(const Tensor<Real> &);                      \
  template Tensor<Real> tanh(const Tensor<Real> &);                         \
  template Tensor<Real> exp(const Tensor<Real> &);                          \
  template Tensor<Real> log(const Tensor<Real> &);                          \
  template Tensor<Real> sqrt(const Tensor<Real> &);                         \
  template Tensor<Real> square(const Tensor<Real> &);                       \
  template Tensor<Real> clamp(const Tensor<Real> &, Real, Real);            \
  template Tensor<Real> sum(const Tensor<Real> &);                          \
  template Tensor<Real> mean(const Tensor<Real> &);                         \
  template Tensor<Real> sum_last(const Tensor<Real> &);

AVSE_INSTANTIATE(float)
AVSE_INSTANTIATE(double)

}  // namespace avse::core
