// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/core/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "avse/error.h"

namespace avse::core {

double GradReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto &e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

namespace {

double evaluate(const ScalarFn &f) {
  NoGradGuard guard;
  const Tensor<double> y = f();
  if (y.size() != 1) {
    fail(ErrorCode::kContract, "finite_diff_check: function is not scalar");
  }
  const double v = y.item();
  if (!std::isfinite(v)) {
    fail(ErrorCode::kEvaluation, "finite_diff_check: function value is not finite");
  }
  return v;
}

}  // namespace

GradReport finite_diff_check(
    const ScalarFn &f,
    std::vector<std::pair<std::string, Tensor<double>>> params,
    const GradCheckOptions &options) {
  for (auto &[name, p] : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    const Tensor<double> y = f();
    if (!std::isfinite(y.item())) {
      fail(ErrorCode::kEvaluation, "finite_diff_check: function value is not finite");
    }
    y.backward();
  }

  GradReport report;
  report.tolerance = options.tolerance;
  for (auto &[name, p] : params) {
    GradEntry entry;
    entry.name = name;
    const std::vector<double> analytic =
        p.has_grad() ? std::vector<double>(p.grad().begin(), p.grad().end())
                     : std::vector<double>(p.size(), 0.0);
    const std::size_t n = p.size();
    const std::size_t stride =
        options.max_coords == 0 || n <= options.max_coords
            ? 1
            : (n + options.max_coords - 1) / options.max_coords;
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < n; i += stride) {
      const double x0 = values[i];
      const double h = 1e-5 * std::max(1.0, std::abs(x0));
      values[i] = x0 + h;
      const double up = evaluate(f);
      values[i] = x0 - h;
      const double down = evaluate(f);
      values[i] = x0;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max(
          {std::abs(analytic[i]), std::abs(numeric), options.floor});
      const double err = std::abs(analytic[i] - numeric) / denom;
      if (err > entry.max_rel_error || i == 0) {
        entry.max_rel_error = std::max(entry.max_rel_error, err);
        entry.worst_index = i;
        entry.analytic = analytic[i];
        entry.numeric = numeric;
      }
    }
    report.entries.push_back(entry);
  }
  report.pass = report.max_rel_error() < options.tolerance;
  return report;
}

GradReport finite_diff_check(
    const std::function<Tensor<double>(const Tensor<double> &)> &f,
    Tensor<double> x, double tolerance) {
  GradCheckOptions options;
  options.tolerance = tolerance;
  return finite_diff_check([&f, x] { return f(x); }, {{"x", x}}, options);
}

}  // namespace avse::core
