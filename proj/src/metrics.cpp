// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/metrics.h"

#include <algorithm>
#include <cmath>

#include "avse/core/ops.h"
#include "avse/error.h"

namespace avse {

namespace {

constexpr double kDbPerNeper = 10.0 / 2.302585092994045684;  // 10 / ln 10

void check_lengths(std::size_t a, std::size_t b, const char *what) {
  if (a != b || a == 0) {
    fail(ErrorCode::kDimension, std::string(what) + ": lengths " +
                                    std::to_string(a) + " and " +
                                    std::to_string(b) + " differ or are empty");
  }
}

double capped_db(double num, double den) {
  return std::clamp(10.0 * std::log10((num + kEps) / (den + kEps)), -kCapDb, kCapDb);
}

// SI-SNR from target and residual energies. Both terms are guarded by kEps
// times the estimate energy t + r, which keeps the ratio scale invariant; a
// zero estimate scores -kCapDb.
double si_db(double t, double r) {
  const double guard = kEps * (t + r);
  if (t + r == 0.0) return -kCapDb;
  return std::clamp(10.0 * std::log10((t + guard) / (r + guard)), -kCapDb, kCapDb);
}

}  // namespace

double si_snr(std::span<const double> ref, std::span<const double> est) {
  check_lengths(ref.size(), est.size(), "si_snr");
  double dot = 0.0, energy = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    dot += est[i] * ref[i];
    energy += ref[i] * ref[i];
  }
  if (energy == 0.0) {
    fail(ErrorCode::kDegenerateReference, "si_snr: reference has zero energy");
  }
  const double alpha = dot / energy;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double p = alpha * ref[i];
    target += p * p;
    residual += (est[i] - p) * (est[i] - p);
  }
  return si_db(target, residual);
}

double snr(std::span<const double> ref, std::span<const double> est) {
  check_lengths(ref.size(), est.size(), "snr");
  double energy = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    energy += ref[i] * ref[i];
    residual += (est[i] - ref[i]) * (est[i] - ref[i]);
  }
  if (energy == 0.0) {
    fail(ErrorCode::kDegenerateReference, "snr: reference has zero energy");
  }
  return capped_db(energy, residual);
}

Improvement improvement(std::span<const double> ref, std::span<const double> est,
                        std::span<const double> mixture) {
  return {si_snr(ref, est) - si_snr(ref, mixture), snr(ref, est) - snr(ref, mixture)};
}

double loss_multi(const std::vector<std::vector<double>> &refs,
                  const std::vector<std::vector<double>> &ests,
                  const std::vector<bool> &present) {
  if (refs.size() != ests.size() || refs.size() != present.size()) {
    fail(ErrorCode::kDimension, "loss_multi: speaker lists are not aligned");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (!present[i]) continue;
    total -= si_snr(refs[i], ests[i]);
    ++count;
  }
  if (count == 0) fail(ErrorCode::kContract, "loss_multi: no speaker is present");
  return total / static_cast<double>(count);
}

template <typename Real>
core::Tensor<Real> si_snr_rows(const core::Tensor<Real> &est,
                               const core::Tensor<Real> &ref) {
  if (est.rank() != 2 || est.shape() != ref.shape()) {
    fail(ErrorCode::kDimension, "si_snr_rows: estimate " + core::shape_str(est.shape()) +
                                    " and reference " + core::shape_str(ref.shape()) +
                                    " must both be [G, L]");
  }
  const std::size_t rows = est.dim(0), len = est.dim(1);
  const Real *e = est.data().data();
  const Real *s = ref.data().data();
  // Per row: alpha, target energy, residual energy (double accumulation).
  std::vector<double> alpha(rows), num(rows), den(rows);
  std::vector<Real> out(rows);
  for (std::size_t g = 0; g < rows; ++g) {
    const Real *eg = e + g * len;
    const Real *sg = s + g * len;
    double dot = 0.0, energy = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      dot += static_cast<double>(eg[i]) * sg[i];
      energy += static_cast<double>(sg[i]) * sg[i];
    }
    if (energy == 0.0) {
      fail(ErrorCode::kDegenerateReference, "si_snr: reference row " +
                                                std::to_string(g) + " has zero energy");
    }
    alpha[g] = dot / energy;
    double t = 0.0, r = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double p = alpha[g] * sg[i];
      t += p * p;
      r += (eg[i] - p) * (eg[i] - p);
    }
    num[g] = t;
    den[g] = r;
    out[g] = static_cast<Real>(si_db(t, r));
  }
  return core::make_result<Real>(
      "si_snr_rows", {rows}, std::move(out), {est, ref},
      [rows, len, alpha, num, den](core::Node<Real> &node) {
        auto *ge = core::parent_grad(node, 0);
        if (!ge) return;
        const Real *e = node.parents[0]->value.data();
        const Real *s = node.parents[1]->value.data();
        for (std::size_t g = 0; g < rows; ++g) {
          const double v = node.value[g];
          if (v <= -kCapDb || v >= kCapDb) continue;
          const Real *eg = e + g * len;
          const Real *sg = s + g * len;
          double energy = 0.0, rs = 0.0;
          for (std::size_t i = 0; i < len; ++i) {
            const double r = eg[i] - alpha[g] * sg[i];
            energy += static_cast<double>(sg[i]) * sg[i];
            rs += r * sg[i];
          }
          // v = k log((t + eps (t + r)) / (r + eps (t + r)))
          // dt/de = 2 alpha s,  dr/de = 2 (r - <r,s>/|s|^2 s)
          const double a = (1.0 + kEps) * num[g] + kEps * den[g];
          const double b = kEps * num[g] + (1.0 + kEps) * den[g];
          const double k = kDbPerNeper * node.grad[g];
          const double ct = k * ((1.0 + kEps) / a - kEps / b);
          const double cr = k * (kEps / a - (1.0 + kEps) / b);
          const double beta = rs / energy;
          Real *gg = ge->data() + g * len;
          for (std::size_t i = 0; i < len; ++i) {
            const double r = eg[i] - alpha[g] * sg[i];
            gg[i] += static_cast<Real>(2.0 * ct * alpha[g] * sg[i] +
                                       2.0 * cr * (r - beta * sg[i]));
          }
        }
      });
}

template <typename Real>
core::Tensor<Real> weighted_neg_si_snr(const core::Tensor<Real> &est,
                                       const core::Tensor<Real> &ref,
                                       const std::vector<Real> &weights) {
  const core::Tensor<Real> v = si_snr_rows(est, ref);
  if (weights.size() != v.size()) {
    fail(ErrorCode::kDimension, "weighted_neg_si_snr: one weight per row expected");
  }
  std::vector<Real> neg(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) neg[i] = -weights[i];
  return core::sum(core::mul(v, core::Tensor<Real>::from({weights.size()}, std::move(neg))));
}

const char *visibility_name(Visibility mode) {
  switch (mode) {
    case Visibility::kOne: return "1-spk";
    case Visibility::kTwo: return "2-spk";
    case Visibility::kThree: return "3-spk";
  }
  return "?";
}

Visibility parse_visibility(const std::string &name) {
  if (name == "1-spk") return Visibility::kOne;
  if (name == "2-spk") return Visibility::kTwo;
  if (name == "3-spk") return Visibility::kThree;
  fail(ErrorCode::kConfig, "unknown visibility mode '" + name +
                               "' (expected 1-spk, 2-spk or 3-spk)");
}

template core::Tensor<float> si_snr_rows(const core::Tensor<float> &, const core::Tensor<float> &);
template core::Tensor<double> si_snr_rows(const core::Tensor<double> &, const core::Tensor<double> &);
template core::Tensor<float> weighted_neg_si_snr(const core::Tensor<float> &,
                                                 const core::Tensor<float> &,
                                                 const std::vector<float> &);
template core::Tensor<double> weighted_neg_si_snr(const core::Tensor<double> &,
                                                  const core::Tensor<double> &,
                                                  const std::vector<double> &);

}  // namespace avse
