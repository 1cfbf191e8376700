// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Finite-difference checks for every differentiable op over ten seeds.

#include <gtest/gtest.h>

#include <random>

#include "avse/core/gradcheck.h"
#include "avse/core/ops.h"
#include "avse/core/recurrent.h"
#include "avse/error.h"

namespace avse::core {
namespace {

using T64 = Tensor<double>;
using Params = std::vector<std::pair<std::string, T64>>;

constexpr int kSeeds = 10;

T64 random_leaf(const Shape &shape, std::mt19937_64 &rng, double lo = -1.0,
                double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(numel(shape));
  for (auto &x : v) x = dist(rng);
  return T64::parameter(shape, std::move(v));
}

// Contracts y against fixed random weights so that every output coordinate
// contributes a distinct amount to the scalar.
T64 project(const T64 &y, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> w(y.size());
  for (auto &v : w) v = dist(rng);
  return sum(mul(y, T64::from(y.shape(), std::move(w))));
}

void expect_pass(const GradReport &report) {
  for (const auto &e : report.entries) {
    EXPECT_LT(e.max_rel_error, report.tolerance)
        << e.name << " at " << e.worst_index << ": analytic " << e.analytic
        << " numeric " << e.numeric;
  }
  EXPECT_TRUE(report.pass);
}

class GradSeed : public ::testing::TestWithParam<int> {
 protected:
  std::mt19937_64 rng{static_cast<std::uint64_t>(GetParam()) * 7919 + 1};
  std::uint64_t seed() const { return static_cast<std::uint64_t>(GetParam()); }
};

TEST_P(GradSeed, Elementwise) {
  T64 a = random_leaf({3, 4}, rng);
  T64 b = random_leaf({3, 4}, rng, 0.5, 2.0);
  T64 bias = random_leaf({4}, rng);
  T64 pos = random_leaf({3, 4}, rng, 0.2, 3.0);
  const auto s = seed();
  auto f = [=] {
    T64 y = add(mul(a, b), bias);
    y = sub(y, div(a, b));
    y = add(y, mul(sigmoid(a), tanh(b)));
    y = add(y, add(exp(a), log(pos)));
    y = add(y, add(sqrt(pos), square(a)));
    y = add(y, relu(a));
    y = add(y, clamp(a, -0.5, 0.5));
    y = add(y, mul_scalar(add_scalar(b, 0.3), 1.7));
    return project(y, s);
  };
  expect_pass(finite_diff_check(f, {{"a", a}, {"b", b}, {"bias", bias}, {"pos", pos}}));
}

TEST_P(GradSeed, Reductions) {
  T64 a = random_leaf({2, 3, 4}, rng);
  const auto s = seed();
  auto f = [=] { return add(project(sum_last(a), s), mean(square(a))); };
  expect_pass(finite_diff_check(f, {{"a", a}}));
}

TEST_P(GradSeed, MatmulBmmAffine) {
  T64 a = random_leaf({3, 5}, rng);
  T64 b = random_leaf({5, 2}, rng);
  T64 p = random_leaf({2, 3, 4}, rng);
  T64 q = random_leaf({2, 4, 3}, rng);
  T64 qt = random_leaf({2, 5, 4}, rng);
  T64 x = random_leaf({2, 3, 5}, rng);
  T64 w = random_leaf({5, 6}, rng);
  T64 bias = random_leaf({6}, rng);
  const auto s = seed();
  auto f = [=] {
    T64 total = project(matmul(a, b), s);
    total = add(total, project(bmm(p, q), s + 1));
    total = add(total, project(bmm(p, qt, true), s + 2));
    total = add(total, project(affine(x, w, bias), s + 3));
    total = add(total, project(affine(x, w, T64()), s + 4));
    return total;
  };
  expect_pass(finite_diff_check(
      f, {{"a", a}, {"b", b}, {"p", p}, {"q", q}, {"qt", qt}, {"x", x}, {"w", w}, {"bias", bias}}));
}

TEST_P(GradSeed, ShapeOps) {
  T64 a = random_leaf({2, 3, 4}, rng);
  T64 b = random_leaf({2, 3, 2}, rng);
  T64 rows = random_leaf({2, 3, 4}, rng);
  const auto s = seed();
  auto f = [=] {
    T64 total = project(reshape(a, {6, 4}), s);
    total = add(total, project(permute(a, {2, 0, 1}), s + 1));
    total = add(total, project(concat_last<double>({a, b}), s + 2));
    total = add(total, project(stack<double>({a, rows}), s + 3));
    total = add(total, project(fit_axis(a, 1, 2), s + 4));
    total = add(total, project(fit_axis(a, 1, 5), s + 5));
    total = add(total, project(repeat_axis(a, 1, 3), s + 6));
    total = add(total, project(gather_rows(a, {1, 0, 1}), s + 7));
    T64 base = reshape(concat_last<double>({a, a}), {4, 3, 4});
    total = add(total, project(scatter_rows(base, {3, 0}, rows), s + 8));
    return total;
  };
  expect_pass(finite_diff_check(f, {{"a", a}, {"b", b}, {"rows", rows}}));
}

TEST_P(GradSeed, SoftmaxAndLayerNorm) {
  T64 x = random_leaf({3, 4, 5}, rng, -2.0, 2.0);
  T64 gamma = random_leaf({5}, rng);
  T64 beta = random_leaf({5}, rng);
  const auto s = seed();
  auto f = [=] {
    T64 total = project(softmax(x, 1), s);
    total = add(total, project(softmax(x, -1), s + 1));
    total = add(total, project(layer_norm(x, gamma, beta, 1e-5), s + 2));
    return total;
  };
  expect_pass(finite_diff_check(f, {{"x", x}, {"gamma", gamma}, {"beta", beta}}));
}

TEST_P(GradSeed, Convolutions) {
  T64 x = random_leaf({2, 3, 23}, rng);
  T64 w = random_leaf({4, 3, 5}, rng);
  T64 z = random_leaf({2, 4, 6}, rng);
  T64 v = random_leaf({4, 2, 5}, rng);
  const auto s = seed();
  auto f = [=] {
    T64 total = project(conv1d(x, w, 3), s);
    total = add(total, project(conv_transpose1d(z, v, 2), s + 1));
    return total;
  };
  expect_pass(finite_diff_check(f, {{"x", x}, {"w", w}, {"z", z}, {"v", v}}));
}

TEST_P(GradSeed, ChunkSegmentation) {
  T64 x = random_leaf({2, 13, 3}, rng);
  const auto s = seed();
  auto f = [=] {
    T64 c = segment_chunks(x, 4, 2);
    return add(project(c, s), project(merge_chunks(square(c), chunk_layout(13, 4, 2)), s + 1));
  };
  expect_pass(finite_diff_check(f, {{"x", x}}));
}

TEST_P(GradSeed, RecurrentLayer) {
  std::mt19937_64 init(seed());
  auto p = init_recurrent<double>(3, 4, Direction::kBidirectional, init);
  T64 x = random_leaf({2, 6, 3}, rng);
  const auto s = seed();
  auto f = [=] { return project(recurrent_layer(x, p), s); };
  expect_pass(finite_diff_check(
      f, {{"x", x},
          {"f.w_ih", p.forward.w_ih},
          {"f.w_hh", p.forward.w_hh},
          {"f.b_ih", p.forward.b_ih},
          {"f.b_hh", p.forward.b_hh},
          {"b.w_ih", p.backward.w_ih},
          {"b.w_hh", p.backward.w_hh},
          {"b.b_ih", p.backward.b_ih},
          {"b.b_hh", p.backward.b_hh}}));
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradSeed, ::testing::Range(0, kSeeds));

TEST(FiniteDiffCheck, SumOfSquaresPassesTightTolerance) {
  std::mt19937_64 rng(1);
  const T64 x = random_leaf({10}, rng);
  const auto report = finite_diff_check([](const T64 &v) { return sum(square(v)); }, x, 1e-6);
  EXPECT_TRUE(report.pass);
}

TEST(FiniteDiffCheck, SoftmaxMatmulChainPasses) {
  std::mt19937_64 rng(2);
  const T64 x = random_leaf({3, 4}, rng);
  const T64 w = T64::from({4, 2}, {0.3, -0.2, 0.5, 0.1, -0.4, 0.7, 0.2, -0.6});
  const auto report = finite_diff_check(
      [w](const T64 &v) { return project(softmax(matmul(v, w), 1), 3); }, x, 1e-4);
  EXPECT_TRUE(report.pass);
}

// An op whose backward over-reports one gradient entry by 10 %.
T64 corrupted_square(const T64 &x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x.data()[i] * x.data()[i];
  return make_result<double>("corrupted_square", x.shape(), std::move(out), {x},
                             [](Node<double> &node) {
                               auto *g = parent_grad(node, 0);
                               const auto &v = node.parents[0]->value;
                               for (std::size_t i = 0; i < v.size(); ++i) {
                                 const double scale = i == 2 ? 1.1 : 1.0;
                                 (*g)[i] += scale * 2.0 * v[i] * node.grad[i];
                               }
                             });
}

TEST(FiniteDiffCheck, CorruptedGradientFails) {
  std::mt19937_64 rng(3);
  const T64 x = random_leaf({5}, rng, 0.5, 1.0);
  const auto report = finite_diff_check([](const T64 &v) { return sum(corrupted_square(v)); }, x, 1e-4);
  EXPECT_FALSE(report.pass);
  EXPECT_EQ(report.entries[0].worst_index, 2u);
}

TEST(FiniteDiffCheck, NonFiniteValueIsEvaluationError) {
  const T64 x = T64::parameter({1}, {-1.0});
  try {
    finite_diff_check([](const T64 &v) { return sum(log(v)); }, x, 1e-4);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kEvaluation);
  }
}

}  // namespace
}  // namespace avse::core
