// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// The gradient suite: finite-difference checks in 64-bit for every
// differentiable operation, every model component and a miniature pipeline.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "avse/core/gradcheck.h"

namespace avse {

struct SuiteCase {
  std::string name;
  std::uint64_t seed = 0;
  core::GradReport report;
  double seconds = 0.0;
};

struct SuiteOptions {
  std::size_t seeds = 3;  // random draws per operation case
  double tolerance = 1e-4;
};

// Runs every case; `on_case` sees each result as it completes.
std::vector<SuiteCase> run_gradient_suite(
    const SuiteOptions &options = {},
    const std::function<void(const SuiteCase &)> &on_case = {});

}  // namespace avse
