// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/core/recurrent.h"

#include <cmath>

#include "avse/core/kernels.h"
#include "avse/core/ops.h"
#include "avse/error.h"

namespace avse::core {

using kernels::Trans;

template <typename Real>
GruParams<Real> init_gru(std::size_t d_in, std::size_t hidden,
                         std::mt19937_64 &rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto draw = [&](const Shape &shape) {
    std::vector<Real> v(numel(shape));
    for (auto &x : v) x = static_cast<Real>(dist(rng));
    return Tensor<Real>::parameter(shape, std::move(v));
  };
  GruParams<Real> p;
  p.w_ih = draw({d_in, 3 * hidden});
  p.w_hh = draw({hidden, 3 * hidden});
  p.b_ih = draw({3 * hidden});
  p.b_hh = draw({3 * hidden});
  return p;
}

template <typename Real>
RecurrentParams<Real> init_recurrent(std::size_t d_in, std::size_t hidden,
                                     Direction direction,
                                     std::mt19937_64 &rng) {
  RecurrentParams<Real> p;
  p.direction = direction;
  p.forward = init_gru<Real>(d_in, hidden, rng);
  if (direction == Direction::kBidirectional) {
    p.backward = init_gru<Real>(d_in, hidden, rng);
  }
  return p;
}

namespace {

template <typename Real>
Real sigmoid_of(Real v) {
  return Real(1) / (Real(1) + std::exp(-v));
}

}  // namespace

template <typename Real>
Tensor<Real> gru(const Tensor<Real> &x, const GruParams<Real> &p,
                 bool reverse) {
  const bool batched = x.rank() == 3;
  if (x.rank() != 2 && !batched) {
    fail(ErrorCode::kDimension,
         "gru: expected [T, d] or [N, T, d], got " + shape_str(x.shape()));
  }
  const std::size_t d = x.shape().back();
  const std::size_t hid = p.hidden_size();
  const std::size_t g3 = 3 * hid;
  if (p.w_ih.rank() != 2 || p.w_ih.dim(0) != d || p.w_ih.dim(1) != g3 ||
      p.w_hh.rank() != 2 || p.w_hh.dim(1) != g3 || p.b_ih.size() != g3 ||
      p.b_hh.size() != g3) {
    fail(ErrorCode::kDimension, "gru: parameters do not match input " +
                                    shape_str(x.shape()));
  }
  const std::size_t seqs = batched ? x.dim(0) : 1;
  const std::size_t steps = x.dim(batched ? 1 : 0);

  // Input projections for every position at once: [N * T, 3H].
  std::vector<Real> gx(seqs * steps * g3);
  kernels::gemm(Trans::kNo, Trans::kNo, seqs * steps, g3, d, x.data().data(),
                p.w_ih.data().data(), gx.data(), false);
  kernels::add_row_bias(seqs * steps, g3, p.b_ih.data().data(), gx.data());

  // Per-step state, indexed by input position t: [T, N, H].
  const std::size_t plane = seqs * hid;
  std::vector<Real> h_prev(steps * plane), r_all(steps * plane),
      z_all(steps * plane), n_all(steps * plane), ghn_all(steps * plane);
  std::vector<Real> out(seqs * steps * hid);
  std::vector<Real> h(plane, Real(0));
  std::vector<Real> gh(seqs * g3);
  const Real *w_hh = p.w_hh.data().data();
  const Real *b_hh = p.b_hh.data().data();

  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    kernels::gemm(Trans::kNo, Trans::kNo, seqs, g3, hid, h.data(), w_hh,
                  gh.data(), false);
    std::copy(h.begin(), h.end(), h_prev.begin() + t * plane);
    for (std::size_t i = 0; i < seqs; ++i) {
      const Real *gxi = gx.data() + (i * steps + t) * g3;
      const Real *ghi = gh.data() + i * g3;
      Real *hi = h.data() + i * hid;
      Real *oi = out.data() + (i * steps + t) * hid;
      const std::size_t base = t * plane + i * hid;
      for (std::size_t j = 0; j < hid; ++j) {
        const Real r = sigmoid_of(gxi[j] + ghi[j] + b_hh[j]);
        const Real z = sigmoid_of(gxi[hid + j] + ghi[hid + j] + b_hh[hid + j]);
        const Real ghn = ghi[2 * hid + j] + b_hh[2 * hid + j];
        const Real n = std::tanh(gxi[2 * hid + j] + r * ghn);
        const Real hn = (Real(1) - z) * n + z * hi[j];
        r_all[base + j] = r;
        z_all[base + j] = z;
        n_all[base + j] = n;
        ghn_all[base + j] = ghn;
        hi[j] = hn;
        oi[j] = hn;
      }
    }
  }

  Shape shape = batched ? Shape{seqs, steps, hid} : Shape{steps, hid};
  return make_result<Real>(
      "gru", std::move(shape), std::move(out), {x, p.w_ih, p.w_hh, p.b_ih, p.b_hh},
      [=, h_prev = std::move(h_prev), r_all = std::move(r_all),
       z_all = std::move(z_all), n_all = std::move(n_all),
       ghn_all = std::move(ghn_all)](Node<Real> &node) {
        const Real *g = node.grad.data();
        const Real *w_hh = node.parents[2]->value.data();
        // Pre-activation gradients, indexed like gx ([N * T, 3H]) and by
        // step for the hidden-side products ([T, N, 3H]).
        std::vector<Real> dgx(seqs * steps * g3);
        std::vector<Real> dgh(steps * seqs * g3);
        std::vector<Real> dh(plane, Real(0));
        for (std::size_t s = steps; s-- > 0;) {
          const std::size_t t = reverse ? steps - 1 - s : s;
          Real *dgh_t = dgh.data() + t * seqs * g3;
          for (std::size_t i = 0; i < seqs; ++i) {
            const Real *gi = g + (i * steps + t) * hid;
            Real *dhi = dh.data() + i * hid;
            Real *dgxi = dgx.data() + (i * steps + t) * g3;
            Real *dghi = dgh_t + i * g3;
            const std::size_t base = t * plane + i * hid;
            for (std::size_t j = 0; j < hid; ++j) {
              const Real r = r_all[base + j], z = z_all[base + j];
              const Real n = n_all[base + j], hp = h_prev[base + j];
              const Real dht = gi[j] + dhi[j];
              const Real dan = dht * (Real(1) - z) * (Real(1) - n * n);
              const Real daz = dht * (hp - n) * z * (Real(1) - z);
              const Real dar = dan * ghn_all[base + j] * r * (Real(1) - r);
              dgxi[j] = dar;
              dgxi[hid + j] = daz;
              dgxi[2 * hid + j] = dan;
              dghi[j] = dar;
              dghi[hid + j] = daz;
              dghi[2 * hid + j] = dan * r;
              dhi[j] = dht * z;
            }
          }
          // dh_prev += dgh_t * W_hh^T
          kernels::gemm(Trans::kNo, Trans::kYes, seqs, hid, g3, dgh_t, w_hh,
                        dh.data(), true);
        }
        const Real *vx = node.parents[0]->value.data();
        if (auto *gx_in = parent_grad(node, 0)) {
          kernels::gemm(Trans::kNo, Trans::kYes, seqs * steps, d, g3,
                        dgx.data(), node.parents[1]->value.data(),
                        gx_in->data(), true);
        }
        if (auto *gw = parent_grad(node, 1)) {
          kernels::gemm(Trans::kYes, Trans::kNo, d, g3, seqs * steps, vx,
                        dgx.data(), gw->data(), true);
        }
        if (auto *gw = parent_grad(node, 2)) {
          kernels::gemm(Trans::kYes, Trans::kNo, hid, g3, steps * seqs,
                        h_prev.data(), dgh.data(), gw->data(), true);
        }
        if (auto *gb = parent_grad(node, 3)) {
          kernels::column_sums(seqs * steps, g3, dgx.data(), gb->data(), true);
        }
        if (auto *gb = parent_grad(node, 4)) {
          kernels::column_sums(steps * seqs, g3, dgh.data(), gb->data(), true);
        }
      });
}

template <typename Real>
Tensor<Real> recurrent_layer(const Tensor<Real> &x,
                             const RecurrentParams<Real> &params) {
  switch (params.direction) {
    case Direction::kForward:
      return gru(x, params.forward, false);
    case Direction::kBackward:
      return gru(x, params.forward, true);
    case Direction::kBidirectional:
      break;
  }
  return concat_last<Real>(
      {gru(x, params.forward, false), gru(x, params.backward, true)});
}

#define AVSE_INSTANTIATE(Real)                                                 \
  template GruParams<Real> init_gru(std::size_t, std::size_t,                  \
                                    std::mt19937_64 &);                        \
  template RecurrentParams<Real> init_recurrent(std::size_t, std::size_t,      \
                                                Direction, std::mt19937_64 &); \
  template Tensor<Real> gru(const Tensor<Real> &, const GruParams<Real> &,     \
                            bool);                                             \
  template Tensor<Real> recurrent_layer(const Tensor<Real> &,                  \
                                        const RecurrentParams<Real> &);

AVSE_INSTANTIATE(float)
AVSE_INSTANTIATE(double)

}  // namespace avse::core
