// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <random>

#include "avse/core/tensor.h"

namespace avse::init {

// Grad-tracked leaf uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; fan_in
// defaults to the leading dimension.
template <typename Real>
core::Tensor<Real> uniform_fan_in(const core::Shape &shape, std::mt19937_64 &rng,
                                  std::size_t fan_in = 0) {
  if (fan_in == 0) fan_in = shape.front();
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<Real> v(core::numel(shape));
  for (auto &x : v) x = static_cast<Real>(dist(rng));
  return core::Tensor<Real>::parameter(shape, std::move(v));
}

template <typename Real>
core::Tensor<Real> constant(const core::Shape &shape, Real value) {
  return core::Tensor<Real>::parameter(shape, std::vector<Real>(core::numel(shape), value));
}

}  // namespace avse::init
