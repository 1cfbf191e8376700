// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Gated recurrent unit layers. The cell follows the usual reset/update
// formulation with gate columns ordered [r, z, n]:
//
//   r  = sigmoid(x W_ir + b_ir + h W_hr + b_hr)
//   z  = sigmoid(x W_iz + b_iz + h W_hz + b_hz)
//   n  = tanh(x W_in + b_in + r * (h W_hn + b_hn))
//   h' = (1 - z) * n + z * h,    h_0 = 0

#pragma once

#include <cstdint>
#include <random>

#include "avse/core/tensor.h"

namespace avse::core {

template <typename Real>
struct GruParams {
  Tensor<Real> w_ih;  // [d_in, 3H]
  Tensor<Real> w_hh;  // [H, 3H]
  Tensor<Real> b_ih;  // [3H]
  Tensor<Real> b_hh;  // [3H]

  std::size_t input_size() const { return w_ih.dim(0); }
  std::size_t hidden_size() const { return w_hh.dim(0); }
};

enum class Direction { kForward, kBackward, kBidirectional };

template <typename Real>
struct RecurrentParams {
  Direction direction = Direction::kBidirectional;
  // Single-direction layers only use `forward`, run in reverse for kBackward.
  GruParams<Real> forward;
  GruParams<Real> backward;

  std::size_t output_size() const {
    const std::size_t h = forward.hidden_size();
    return direction == Direction::kBidirectional ? 2 * h : h;
  }
};

// Weights uniform in [-1/sqrt(H), 1/sqrt(H)], as grad-tracked leaves.
template <typename Real>
GruParams<Real> init_gru(std::size_t d_in, std::size_t hidden,
                         std::mt19937_64 &rng);

template <typename Real>
RecurrentParams<Real> init_recurrent(std::size_t d_in, std::size_t hidden,
                                     Direction direction, std::mt19937_64 &rng);

// One recurrent pass over x [T, d_in] or [N, T, d_in] (N independent
// sequences), returning hidden states [.., T, H]. With `reverse` the
// sequence is consumed from the last step to the first; outputs stay
// aligned with their input positions.
template <typename Real>
Tensor<Real> gru(const Tensor<Real> &x, const GruParams<Real> &params,
                 bool reverse);

// Sequence-to-sequence layer; bidirectional output concatenates the forward
// and backward hidden states along the feature axis.
template <typename Real>
Tensor<Real> recurrent_layer(const Tensor<Real> &x,
                             const RecurrentParams<Real> &params);

}  // namespace avse::core
