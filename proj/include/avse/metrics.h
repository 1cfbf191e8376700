// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// SI-SNR objective and improvement metrics. The reference is used as given
// (no mean removal). SI-SNR guards both energies by kEps times the estimate
// energy, plain SNR by kEps; both are capped to +/-kCapDb.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "avse/core/tensor.h"

namespace avse {

inline constexpr double kEps = 1e-8;
inline constexpr double kCapDb = 60.0;

double si_snr(std::span<const double> ref, std::span<const double> est);
double snr(std::span<const double> ref, std::span<const double> est);

struct Improvement {
  double si_snri = 0.0;
  double snri = 0.0;
};

Improvement improvement(std::span<const double> ref, std::span<const double> est,
                        std::span<const double> mixture);

// Mean over present speakers of -si_snr.
double loss_multi(const std::vector<std::vector<double>> &refs,
                  const std::vector<std::vector<double>> &ests,
                  const std::vector<bool> &present);

// Differentiable row-wise SI-SNR in dB: est [G, L] against constant refs
// [G, L] -> [G]. Capped rows pass no gradient.
template <typename Real>
core::Tensor<Real> si_snr_rows(const core::Tensor<Real> &est,
                               const core::Tensor<Real> &ref);

// sum_g weight[g] * -si_snr(row g); weights select and average the present
// speakers of each mixture.
template <typename Real>
core::Tensor<Real> weighted_neg_si_snr(const core::Tensor<Real> &est,
                                       const core::Tensor<Real> &ref,
                                       const std::vector<Real> &weights);

enum class Visibility { kOne, kTwo, kThree };

const char *visibility_name(Visibility mode);
Visibility parse_visibility(const std::string &name);

struct MetricsRow {
  std::string sample_id;
  Visibility mode = Visibility::kOne;
  double si_snri_db = 0.0;
  double snri_db = 0.0;
};

}  // namespace avse
