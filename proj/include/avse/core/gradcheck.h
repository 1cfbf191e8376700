// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Central finite-difference verification of analytic gradients (64-bit).

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "avse/core/tensor.h"

namespace avse::core {

struct GradEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;
};

struct GradReport {
  std::vector<GradEntry> entries;
  double tolerance = 0.0;
  bool pass = false;

  double max_rel_error() const;
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  // Relative errors use max(|analytic|, |numeric|, floor) as denominator so
  // that gradients which are zero up to rounding are not compared
  // relatively.
  double floor = 1e-6;
  // Check at most this many coordinates per parameter (evenly strided);
  // 0 checks all of them.
  std::size_t max_coords = 0;
};

using ScalarFn = std::function<Tensor<double>()>;

// `f` must rebuild the graph from `params` on every call and return a
// single-element tensor. Each parameter is perturbed in place with step
// h = 1e-5 * max(1, |x_i|) and restored afterwards.
GradReport finite_diff_check(const ScalarFn &f,
                             std::vector<std::pair<std::string, Tensor<double>>> params,
                             const GradCheckOptions &options = {});

// Single-input form: f(x) with x a grad-tracked tensor.
GradReport finite_diff_check(
    const std::function<Tensor<double>(const Tensor<double> &)> &f,
    Tensor<double> x, double tolerance);

}  // namespace avse::core
