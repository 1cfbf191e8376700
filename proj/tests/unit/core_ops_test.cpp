// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "avse/core/kernels.h"
#include "avse/core/ops.h"
#include "avse/core/recurrent.h"
#include "avse/error.h"

namespace avse::core {
namespace {

using T64 = Tensor<double>;

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto &x : v) x = dist(rng);
  return v;
}

T64 random_tensor(const Shape &shape, std::uint64_t seed) {
  return T64::from(shape, random_values(numel(shape), seed));
}

TEST(Tensor, RejectsSizeMismatch) {
  EXPECT_THROW(T64::from({2, 3}, std::vector<double>(5)), Error);
  EXPECT_THROW(T64::zeros({2, 0}), Error);
}

TEST(Matmul, IdentityLeavesInputUnchanged) {
  std::vector<double> eye(9, 0.0);
  eye[0] = eye[4] = eye[8] = 1.0;
  const T64 b = random_tensor({3, 3}, 1);
  const T64 c = matmul(T64::from({3, 3}, eye), b);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(c.data()[i], b.data()[i]);
}

TEST(Matmul, OneByOne) {
  EXPECT_EQ(matmul(T64::from({1, 1}, {2.0}), T64::from({1, 1}, {3.0})).item(), 6.0);
}

TEST(Matmul, MatchesTripleLoop) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t m = 1 + rng() % 32, k = 1 + rng() % 32, n = 1 + rng() % 32;
    const T64 a = random_tensor({m, k}, seed * 2 + 100);
    const T64 b = random_tensor({k, n}, seed * 2 + 101);
    const T64 c = matmul(a, b);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t l = 0; l < k; ++l) {
          acc += a.data()[i * k + l] * b.data()[l * n + j];
        }
        ASSERT_NEAR(c.data()[i * n + j], acc, 1e-12);
      }
    }
  }
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(T64::zeros({2, 3}), T64::zeros({2, 3}));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimension);
    EXPECT_NE(std::string(e.what()).find("[2, 3]"), std::string::npos);
  }
}

TEST(Kernels, GemmAgreesWithReferenceForAllTransposes) {
  const std::size_t m = 37, n = 29, k = 41;
  const auto a = random_values(m * k, 3);
  const auto b = random_values(k * n, 4);
  for (auto ta : {kernels::Trans::kNo, kernels::Trans::kYes}) {
    for (auto tb : {kernels::Trans::kNo, kernels::Trans::kYes}) {
      std::vector<double> fast(m * n, 0.5), ref(m * n, 0.5);
      kernels::gemm(ta, tb, m, n, k, a.data(), b.data(), fast.data(), true);
      kernels::reference::gemm(ta, tb, m, n, k, a.data(), b.data(), ref.data(), true);
      for (std::size_t i = 0; i < m * n; ++i) ASSERT_NEAR(fast[i], ref[i], 1e-12);
    }
  }
}

TEST(Softmax, SymmetricPair) {
  const T64 y = softmax(T64::from({2}, {0.0, 0.0}), 0);
  EXPECT_DOUBLE_EQ(y.data()[0], 0.5);
  EXPECT_DOUBLE_EQ(y.data()[1], 0.5);
}

TEST(Softmax, HandEvaluatedPair) {
  const T64 y = softmax(T64::from({2}, {0.0, std::log(3.0)}), 0);
  EXPECT_NEAR(y.data()[0], 0.25, 1e-15);
  EXPECT_NEAR(y.data()[1], 0.75, 1e-15);
}

TEST(Softmax, ShiftInvariantAndNormalized) {
  const T64 x = random_tensor({4, 5, 3}, 7);
  for (int axis : {0, 1, 2, -1}) {
    const T64 y = softmax(x, axis);
    const T64 y_shift = softmax(add_scalar(x, 12.5), axis);
    for (std::size_t i = 0; i < y.size(); ++i) {
      EXPECT_GT(y.data()[i], 0.0);
      EXPECT_NEAR(y.data()[i], y_shift.data()[i], 1e-12);
    }
  }
  const T64 y = softmax(x, 1);
  for (std::size_t o = 0; o < 4; ++o) {
    for (std::size_t i = 0; i < 3; ++i) {
      double total = 0.0;
      for (std::size_t k = 0; k < 5; ++k) total += y.data()[(o * 5 + k) * 3 + i];
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
  EXPECT_THROW(softmax(x, 3), Error);
}

TEST(LayerNorm, ConstantVectorMapsToZero) {
  const T64 y = layer_norm(T64::full({1, 4}, 3.0), T64::full({4}, 1.0),
                           T64::zeros({4}), 1e-5);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, HandEvaluatedPair) {
  const T64 y = layer_norm(T64::from({2}, {-1.0, 1.0}), T64::full({2}, 1.0),
                           T64::zeros({2}), 1e-5);
  const double expect = 1.0 / std::sqrt(1.0 + 1e-5);
  EXPECT_NEAR(y.data()[0], -expect, 1e-12);
  EXPECT_NEAR(y.data()[1], expect, 1e-12);
  EXPECT_NEAR(expect, 0.99999, 1e-5);
}

TEST(LayerNorm, ZeroGainGivesBeta) {
  const T64 beta = T64::from({3}, {0.5, -2.0, 7.0});
  const T64 y = layer_norm(random_tensor({4, 3}, 9), T64::zeros({3}), beta, 1e-5);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y.data()[i], beta.data()[i % 3]);
}

TEST(LayerNorm, StandardizesRows) {
  const T64 y = layer_norm(random_tensor({6, 16}, 10), T64::full({16}, 1.0),
                           T64::zeros({16}), 1e-9);
  for (std::size_t r = 0; r < 6; ++r) {
    double mu = 0.0, var = 0.0;
    for (std::size_t j = 0; j < 16; ++j) mu += y.data()[r * 16 + j];
    mu /= 16;
    for (std::size_t j = 0; j < 16; ++j) var += std::pow(y.data()[r * 16 + j] - mu, 2);
    var /= 16;
    EXPECT_LT(std::abs(mu), 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-4);
  }
}

TEST(LayerNorm, RejectsNonPositiveEps) {
  try {
    layer_norm(T64::zeros({2}), T64::zeros({2}), T64::zeros({2}), 0.0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(Conv1d, UnitImpulseKernelIsIdentity) {
  const T64 x = random_tensor({3, 10}, 11);
  std::vector<double> w(9, 0.0);
  w[0] = w[4] = w[8] = 1.0;
  const T64 y = conv1d(x, T64::from({3, 3, 1}, w), 1);
  ASSERT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(Conv1d, MovingSumByHand) {
  const T64 y = conv1d(T64::from({1, 3}, {1.0, 2.0, 3.0}), T64::full({1, 1, 2}, 1.0), 1);
  ASSERT_EQ(y.shape(), (Shape{1, 2}));
  EXPECT_EQ(y.data()[0], 3.0);
  EXPECT_EQ(y.data()[1], 5.0);
}

TEST(Conv1d, OutputLengthFormula) {
  const T64 y = conv1d(T64::zeros({1, 100}), T64::zeros({2, 1, 40}), 20);
  EXPECT_EQ(y.shape(), (Shape{2, 4}));
}

TEST(Conv1d, TooShortInputIsRejected) {
  try {
    conv1d(T64::zeros({1, 10}), T64::zeros({1, 1, 11}), 1);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kInputTooShort);
  }
}

TEST(Conv1d, AgreesWithNaiveLoops) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t b = 1 + rng() % 3, ci = 1 + rng() % 4, co = 1 + rng() % 5;
    const std::size_t l = 1 + rng() % 6, s = 1 + rng() % 3, t = l + rng() % 27;
    const T64 x = random_tensor({b, ci, t}, seed + 50);
    const T64 w = random_tensor({co, ci, l}, seed + 60);
    const T64 y = conv1d(x, w, s);
    const std::size_t frames = (t - l) / s + 1;
    for (std::size_t bb = 0; bb < b; ++bb) {
      for (std::size_t o = 0; o < co; ++o) {
        for (std::size_t f = 0; f < frames; ++f) {
          double acc = 0.0;
          for (std::size_t c = 0; c < ci; ++c) {
            for (std::size_t k = 0; k < l; ++k) {
              acc += w.data()[(o * ci + c) * l + k] *
                     x.data()[(bb * ci + c) * t + f * s + k];
            }
          }
          ASSERT_NEAR(y.data()[(bb * co + o) * frames + f], acc, 1e-12);
        }
      }
    }
  }
}

TEST(ConvTranspose1d, AgreesWithReferenceKernel) {
  const std::size_t b = 2, f = 5, c = 3, frames = 7, l = 4, s = 2;
  const T64 x = random_tensor({b, f, frames}, 70);
  const T64 w = random_tensor({f, c, l}, 71);
  const T64 y = conv_transpose1d(x, w, s);
  std::vector<double> ref(b * c * ((frames - 1) * s + l));
  kernels::reference::conv_transpose1d(b, c, frames, f, l, s, x.data().data(),
                                       w.data().data(), ref.data());
  ASSERT_EQ(y.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(y.data()[i], ref[i], 1e-12);
}

TEST(Backward, SquareAtThree) {
  const T64 x = T64::parameter({1}, {3.0});
  square(x).backward();
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(Backward, SumGivesOnes) {
  const T64 x = T64::parameter({2, 3}, random_values(6, 1));
  sum(x).backward();
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, RepeatedCallsAccumulate) {
  const T64 x = T64::parameter({1}, {3.0});
  const T64 y = mul_scalar(square(x), 1.0);
  y.backward();
  y.backward();
  EXPECT_EQ(x.grad()[0], 12.0);
  const_cast<T64 &>(x).zero_grad();
  y.backward();
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(Backward, NonScalarIsContractError) {
  const T64 x = T64::parameter({2}, {1.0, 2.0});
  try {
    square(x).backward();
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kContract);
  }
}

TEST(Backward, NoGradGuardStopsRecording) {
  const T64 x = T64::parameter({1}, {3.0});
  NoGradGuard guard;
  EXPECT_FALSE(square(x).requires_grad());
}

GruParams<double> hand_cell() {
  // 1 input, 2 hidden units.
  GruParams<double> p;
  p.w_ih = T64::parameter({1, 6}, {0.5, -0.3, 0.8, 0.1, -0.7, 0.2});
  p.w_hh = T64::parameter({2, 6}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6,
                                   -0.6, -0.5, -0.4, -0.3, -0.2, -0.1});
  p.b_ih = T64::parameter({6}, {0.01, 0.02, 0.03, 0.04, 0.05, 0.06});
  p.b_hh = T64::parameter({6}, {-0.05, 0.04, -0.03, 0.02, -0.01, 0.0});
  return p;
}

TEST(Recurrent, ZeroInputAndBiasesGiveZeroStates) {
  std::mt19937_64 rng(5);
  auto p = init_recurrent<double>(3, 4, Direction::kBidirectional, rng);
  for (auto *g : {&p.forward, &p.backward}) {
    for (auto &v : g->b_ih.mutable_data()) v = 0.0;
    for (auto &v : g->b_hh.mutable_data()) v = 0.0;
  }
  const T64 y = recurrent_layer(T64::zeros({7, 3}), p);
  ASSERT_EQ(y.shape(), (Shape{7, 8}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Recurrent, SingleStepMatchesHandCell) {
  const GruParams<double> p = hand_cell();
  const double x = 0.9;
  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const auto wi = p.w_ih.data();
  const auto bi = p.b_ih.data();
  const auto bh = p.b_hh.data();
  const T64 y = gru(T64::from({1, 1}, {x}), p, false);
  for (std::size_t j = 0; j < 2; ++j) {
    // h_0 = 0, so the recurrent products reduce to their biases.
    const double r = sig(x * wi[j] + bi[j] + bh[j]);
    const double z = sig(x * wi[2 + j] + bi[2 + j] + bh[2 + j]);
    const double n = std::tanh(x * wi[4 + j] + bi[4 + j] + r * bh[4 + j]);
    EXPECT_NEAR(y.data()[j], (1.0 - z) * n, 1e-10);
  }
}

TEST(Recurrent, TwoStepsMatchHandCell) {
  const GruParams<double> p = hand_cell();
  const std::vector<double> xs{0.9, -0.4};
  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const auto wi = p.w_ih.data(), wh = p.w_hh.data();
  const auto bi = p.b_ih.data(), bh = p.b_hh.data();
  double h[2] = {0.0, 0.0};
  const T64 y = gru(T64::from({2, 1}, xs), p, false);
  for (std::size_t t = 0; t < 2; ++t) {
    double gh[6];
    for (std::size_t c = 0; c < 6; ++c) gh[c] = h[0] * wh[c] + h[1] * wh[6 + c] + bh[c];
    double next[2];
    for (std::size_t j = 0; j < 2; ++j) {
      const double r = sig(xs[t] * wi[j] + bi[j] + gh[j]);
      const double z = sig(xs[t] * wi[2 + j] + bi[2 + j] + gh[2 + j]);
      const double n = std::tanh(xs[t] * wi[4 + j] + bi[4 + j] + r * gh[4 + j]);
      next[j] = (1.0 - z) * n + z * h[j];
    }
    h[0] = next[0];
    h[1] = next[1];
    EXPECT_NEAR(y.data()[t * 2 + 0], h[0], 1e-12);
    EXPECT_NEAR(y.data()[t * 2 + 1], h[1], 1e-12);
  }
}

T64 reverse_time(const T64 &x) {
  const std::size_t steps = x.dim(0), d = x.dim(1);
  std::vector<double> v(x.size());
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < d; ++j) v[t * d + j] = x.data()[(steps - 1 - t) * d + j];
  }
  return T64::from(x.shape(), v);
}

TEST(Recurrent, BidirectionalHalvesSwapUnderTimeReversal) {
  std::mt19937_64 rng(8);
  auto p = init_recurrent<double>(3, 4, Direction::kBidirectional, rng);
  const T64 x = random_tensor({9, 3}, 12);
  // Same cell in both directions so that the halves are comparable.
  p.backward = p.forward;
  const T64 y = recurrent_layer(x, p);
  const T64 y_rev = reverse_time(recurrent_layer(reverse_time(x), p));
  for (std::size_t t = 0; t < 9; ++t) {
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_NEAR(y.data()[t * 8 + j], y_rev.data()[t * 8 + 4 + j], 1e-12);
      EXPECT_NEAR(y.data()[t * 8 + 4 + j], y_rev.data()[t * 8 + j], 1e-12);
    }
  }
}

TEST(Recurrent, BatchedSequencesAreIndependent) {
  std::mt19937_64 rng(9);
  const auto p = init_gru<double>(3, 5, rng);
  const T64 x = random_tensor({4, 6, 3}, 13);
  const T64 y = gru(x, p, true);
  for (std::size_t i = 0; i < 4; ++i) {
    const T64 xi = gather_rows(x, {i});
    const T64 yi = gru(reshape(xi, {6, 3}), p, true);
    for (std::size_t k = 0; k < yi.size(); ++k) {
      EXPECT_NEAR(y.data()[i * yi.size() + k], yi.data()[k], 1e-12);
    }
  }
}

TEST(Chunks, PaddedCountForHundredFrames) {
  EXPECT_EQ(chunk_layout(100, 50, 25).n_chunks, 5u);
  const T64 c = segment_chunks(T64::zeros({100, 4}), 50, 25);
  EXPECT_EQ(c.shape(), (Shape{5, 50, 4}));
  for (double v : c.data()) EXPECT_EQ(v, 0.0);
}

TEST(Chunks, OddChunkSizeIsConfigError) {
  try {
    segment_chunks(T64::zeros({10, 2}), 7, 3);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(Chunks, MergeInvertsSegment) {
  for (std::size_t len : {1u, 24u, 25u, 26u, 100u, 1599u}) {
    const T64 x = random_tensor({2, len, 3}, len);
    const ChunkLayout layout = chunk_layout(len, 50, 25);
    const T64 back = merge_chunks(segment_chunks(x, 50, 25), layout);
    ASSERT_EQ(back.shape(), x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      ASSERT_NEAR(back.data()[i], x.data()[i], 1e-6);
    }
  }
}

TEST(ShapeOps, PermuteRoundTrip) {
  const T64 x = random_tensor({2, 3, 4, 5}, 14);
  const T64 y = permute(x, {2, 0, 3, 1});
  EXPECT_EQ(y.shape(), (Shape{4, 2, 5, 3}));
  EXPECT_EQ(y.data()[((1 * 2 + 1) * 5 + 3) * 3 + 2],
            x.data()[((1 * 3 + 2) * 4 + 1) * 5 + 3]);
  const T64 back = permute(y, {1, 3, 0, 2});
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(back.data()[i], x.data()[i]);
}

TEST(ShapeOps, RepeatAndFitAxis) {
  const T64 x = T64::from({2, 1}, {1.0, 2.0});
  const T64 r = repeat_axis(x, 0, 3);
  EXPECT_EQ(r.shape(), (Shape{6, 1}));
  EXPECT_EQ(std::vector<double>(r.data().begin(), r.data().end()),
            (std::vector<double>{1, 1, 1, 2, 2, 2}));
  const T64 cut = fit_axis(r, 0, 4);
  EXPECT_EQ(cut.shape(), (Shape{4, 1}));
  const T64 pad = fit_axis(x, 0, 3);
  EXPECT_EQ(pad.data()[2], 0.0);
}

TEST(ShapeOps, ScatterRejectsRepeatedIndex) {
  EXPECT_THROW(scatter_rows(T64::zeros({3, 2}), {1, 1}, T64::zeros({2, 2})), Error);
}

}  // namespace
}  // namespace avse::core
