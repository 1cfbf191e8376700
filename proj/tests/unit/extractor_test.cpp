// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "avse/core/gradcheck.h"
#include "avse/core/ops.h"
#include "avse/dataset.h"
#include "avse/error.h"
#include "avse/extractor.h"
#include "avse/metrics.h"

namespace avse {
namespace {

using T32 = core::Tensor<float>;
using T64 = core::Tensor<double>;

template <typename Real>
core::Tensor<Real> random_tensor(const core::Shape &shape, std::uint64_t seed, bool leaf = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<Real> v(core::numel(shape));
  for (auto &x : v) x = static_cast<Real>(dist(rng));
  return leaf ? core::Tensor<Real>::parameter(shape, std::move(v))
              : core::Tensor<Real>::from(shape, std::move(v));
}

// Small geometry for gradient checks: 0.25 s of audio, d_emb = 8, R = 1.
ModelConfig mini_config() {
  ModelConfig c;
  c.codec = {40, 20, 6};
  c.d_emb = 8;
  c.repeats = 1;
  c.chunk_size = 10;
  c.chunk_hop = 5;
  c.rnn_hidden = 4;
  c.visual_width = 6;
  c.visual_hidden = 3;
  return c;
}

template <typename Real>
std::vector<Real> values(const core::Tensor<Real> &t) {
  return {t.data().begin(), t.data().end()};
}

double max_abs_diff(std::span<const float> a, std::span<const float> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - b[i]));
  return m;
}

std::vector<std::pair<std::string, T64>> leaves(ExtractorModel<double> &model) {
  std::vector<std::pair<std::string, T64>> out;
  for (auto &[name, t] : model.named_parameters()) out.emplace_back(name, *t);
  return out;
}

void expect_pass(const core::GradReport &report) {
  for (const auto &e : report.entries) {
    EXPECT_LT(e.max_rel_error, report.tolerance)
        << e.name << " at " << e.worst_index << ": analytic " << e.analytic << " numeric "
        << e.numeric;
  }
  EXPECT_TRUE(report.pass);
}

class IsamTest : public ::testing::Test {
 protected:
  ModelConfig config = [] {
    ModelConfig c;
    c.d_emb = 16;
    return c;
  }();
  ExtractorModel<float> model = init_model<float>(config, 3);
  const IsamParams<float> &isam() { return model.isam[0]; }
};

TEST_F(IsamTest, BypassIsBitIdentical) {
  SpeakerBatch<float> batch{random_tensor<float>({3, 20, 16}, 1), {true, true, true}};
  const auto out = isam_forward(batch, isam(), true);
  EXPECT_EQ(values(out.embeddings), values(batch.embeddings));
}

TEST_F(IsamTest, SingleSpeakerPathAttendsToItself) {
  const T32 x = random_tensor<float>({1, 20, 16}, 2);
  const auto out = isam_forward(SpeakerBatch<float>{x, {true}}, isam(), false);
  const auto &p = isam();
  T32 y = add(x, affine(affine(x, p.wv, p.bv), p.wo, p.bo));
  y = add(y, affine(relu(affine(y, p.ff1_w, p.ff1_b)), p.ff2_w, p.ff2_b));
  y = layer_norm(y, p.norm.gamma, p.norm.beta, 1e-5f);
  EXPECT_LT(max_abs_diff(out.embeddings.data(), y.data()), 1e-5);
}

TEST_F(IsamTest, PermutationEquivariance) {
  std::mt19937_64 rng(9);
  for (std::size_t s : {2u, 3u, 4u}) {
    for (int trial = 0; trial < 5; ++trial) {
      const T32 x = random_tensor<float>({s, 12, 16}, 100 * s + trial);
      std::vector<std::size_t> perm(s);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      const std::vector<bool> all(s, true);
      const T32 a = gather_rows(isam_forward(SpeakerBatch<float>{x, all}, isam(), false).embeddings, perm);
      const T32 b = isam_forward(SpeakerBatch<float>{gather_rows(x, perm), all}, isam(), false).embeddings;
      EXPECT_LT(max_abs_diff(a.data(), b.data()), 1e-5) << "S=" << s;
    }
  }
}

TEST_F(IsamTest, IdenticalSpeakersReceiveIdenticalOutputs) {
  const T32 one = random_tensor<float>({1, 12, 16}, 4);
  const T32 x = gather_rows(one, {0, 0, 0});
  const T32 y = isam_forward(SpeakerBatch<float>{x, {true, true, true}}, isam(), false).embeddings;
  const std::size_t n = 12 * 16;
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(y.data()[i], y.data()[n + i], 1e-6);
    EXPECT_NEAR(y.data()[i], y.data()[2 * n + i], 1e-6);
  }
}

TEST_F(IsamTest, AbsentSpeakersAreExcludedAndUnchanged) {
  const T32 x = random_tensor<float>({3, 12, 16}, 5);
  const T32 y = isam_forward(SpeakerBatch<float>{x, {true, false, true}}, isam(), false).embeddings;
  const T32 pair = isam_forward(SpeakerBatch<float>{gather_rows(x, {0, 2}), {true, true}}, isam(), false)
                       .embeddings;
  const std::size_t n = 12 * 16;
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(y.data()[n + i], x.data()[n + i]);
    EXPECT_EQ(y.data()[i], pair.data()[i]);
    EXPECT_EQ(y.data()[2 * n + i], pair.data()[n + i]);
  }
}

TEST_F(IsamTest, MalformedPresenceIsContractError) {
  for (auto batch : {SpeakerBatch<float>{random_tensor<float>({2, 4, 16}, 1), {}},
                     SpeakerBatch<float>{random_tensor<float>({2, 4, 16}, 1), {false, true}}}) {
    try {
      isam_forward(batch, isam(), false);
      FAIL();
    } catch (const Error &e) {
      EXPECT_EQ(e.code(), ErrorCode::kContract);
    }
  }
}

TEST(ParameterBudget, IsamShareBelowFivePercentAtDeskConfig) {
  auto model = init_model<float>(ModelConfig{}, 1);
  const double share = static_cast<double>(model.isam_parameter_count()) /
                       static_cast<double>(model.parameter_count());
  EXPECT_LT(share, 0.05);
  EXPECT_GT(share, 0.0);
  EXPECT_EQ(model.isam.size(), 2u);
  EXPECT_EQ(model.blocks.size(), 2u);
}

TEST(Config, OddChunkIsConfigError) {
  ModelConfig c;
  c.chunk_size = 51;
  try {
    c.validate();
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(DualPath, PreservesShape) {
  auto model = init_model<double>(mini_config(), 2);
  const T64 x = random_tensor<double>({2, 37, 8}, 3);
  EXPECT_EQ(dual_path_block(x, model.blocks[0], model.config).shape(), x.shape());
}

TEST(DualPath, ZeroedProjectionsGiveResidualIdentity) {
  auto model = init_model<double>(mini_config(), 2);
  auto &b = model.blocks[0];
  for (auto *t : {&b.intra_w, &b.intra_b, &b.inter_w, &b.inter_b, &b.intra_norm.beta,
                  &b.inter_norm.beta}) {
    *t = T64::zeros(t->shape());
  }
  const T64 x = random_tensor<double>({1, 60, 8}, 4);
  const T64 y = dual_path_block(x, b, model.config);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y.data()[i], x.data()[i], 1e-12);
}

TEST(DualPath, GradientMatchesFiniteDifferences) {
  auto model = init_model<double>(mini_config(), 5);
  auto &b = model.blocks[0];
  const T64 x = random_tensor<double>({1, 60, 8}, 6, true);
  const T64 w = random_tensor<double>({1, 60, 8}, 7);
  const ModelConfig cfg = model.config;
  auto f = [&] { return sum(mul(dual_path_block(x, b, cfg), w)); };
  std::vector<std::pair<std::string, T64>> params{{"x", x}};
  for (auto &[name, t] : model.named_parameters()) {
    if (name.rfind("block0.", 0) == 0) params.emplace_back(name, *t);
  }
  ASSERT_GT(params.size(), 10u);
  core::GradCheckOptions options;
  options.max_coords = 40;
  expect_pass(core::finite_diff_check(f, params, options));
}

TEST(Fusion, ShapesAndAlignment) {
  const T64 a = random_tensor<double>({2, 9, 8}, 1), v = random_tensor<double>({2, 9, 8}, 2);
  const T64 w = random_tensor<double>({16, 8}, 3), b = random_tensor<double>({8}, 4);
  EXPECT_EQ(fuse_visual(a, v, w, b).shape(), a.shape());
  try {
    fuse_visual(a, random_tensor<double>({2, 8, 8}, 5), w, b);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlignment);
  }
}

TEST(Fusion, ZeroVisualDependsOnlyOnAudioWeights) {
  const T64 a = random_tensor<double>({1, 9, 8}, 1);
  const T64 w = random_tensor<double>({16, 8}, 3);
  const T64 y = fuse_visual(a, T64::zeros({1, 9, 8}), w, T64::zeros({8}));
  const T64 w_audio = T64::from({8, 8}, std::vector<double>(w.data().begin(), w.data().begin() + 64));
  const T64 ref = relu(matmul(reshape(a, {9, 8}), w_audio));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.data()[i], ref.data()[i], 1e-12);
}

TEST(Fusion, GradientMatchesFiniteDifferences) {
  const T64 a = random_tensor<double>({2, 9, 8}, 1, true), v = random_tensor<double>({2, 9, 8}, 2, true);
  const T64 w = random_tensor<double>({16, 8}, 3, true), b = random_tensor<double>({8}, 4, true);
  const T64 proj = random_tensor<double>({2, 9, 8}, 5);
  auto f = [=] { return sum(mul(fuse_visual(a, v, w, b), proj)); };
  expect_pass(core::finite_diff_check(f, {{"audio", a}, {"visual", v}, {"w", w}, {"b", b}}));
}

TEST(Isam, GradientMatchesFiniteDifferences) {
  auto model = init_model<double>(mini_config(), 8);
  auto &p = model.isam[0];
  const T64 x = random_tensor<double>({5, 6, 8}, 9, true);
  const T64 proj = random_tensor<double>({5, 6, 8}, 10);
  auto f = [&] { return sum(mul(isam_apply(x, {{0, 2}, {1, 3, 4}}, p, 1e-5), proj)); };
  std::vector<std::pair<std::string, T64>> params{{"x", x}};
  for (auto &[name, t] : model.named_parameters()) {
    if (name.rfind("isam0.", 0) == 0) params.emplace_back(name, *t);
  }
  expect_pass(core::finite_diff_check(f, params));
}

class PipelineTest : public ::testing::Test {
 protected:
  DataConfig data = [] {
    DataConfig d;
    d.duration_s = 0.5;
    d.min_turn = 1200;
    return d;
  }();
  Example example = make_example(data, 17, "t");
};

TEST_F(PipelineTest, ReturnsOneMixtureLengthWaveformPerFace) {
  auto model = init_model<float>(ModelConfig{}, 1);
  const std::vector<float> mix(example.sample.mixture.begin(), example.sample.mixture.end());
  const auto out = extract<float>(model, mix, {&example.faces[0], &example.faces[1]}, false);
  ASSERT_EQ(out.size(), 2u);
  for (const auto &w : out) EXPECT_EQ(w.size(), mix.size());
}

TEST_F(PipelineTest, BypassedJointExtractionEqualsIndependentRuns) {
  auto model = init_model<float>(ModelConfig{}, 2);
  const std::vector<float> mix(example.sample.mixture.begin(), example.sample.mixture.end());
  const auto joint = extract<float>(model, mix, {&example.faces[0], &example.faces[1]}, true);
  const auto first = extract<float>(model, mix, {&example.faces[0]}, true);
  const auto second = extract<float>(model, mix, {&example.faces[1]}, true);
  EXPECT_LT(max_abs_diff(joint[0], first[0]), 1e-5);
  EXPECT_LT(max_abs_diff(joint[1], second[0]), 1e-5);
  // Without bypass the speakers interact.
  const auto attended = extract<float>(model, mix, {&example.faces[0], &example.faces[1]}, false);
  EXPECT_GT(max_abs_diff(attended[0], first[0]), 0.0);
}

TEST_F(PipelineTest, BatchedRequestMatchesSingleMixtureCalls) {
  auto model = init_model<float>(ModelConfig{}, 3);
  const Example other = make_example(data, 18, "u");
  ExtractRequest<float> req;
  std::vector<float> mixes;
  for (const Example *ex : std::vector<const Example *>{&example, &other}) mixes.insert(mixes.end(), ex->sample.mixture.begin(), ex->sample.mixture.end());
  const std::size_t len = example.length();
  req.mixtures = T32::from({2, len}, mixes);
  req.faces = stack_streams<float>({&example.faces[0], &example.faces[1], &other.faces[1]});
  req.owner = {0, 0, 1};
  req.isam_bypass = {false, true};
  const T32 est = extract_batch(model, req);
  const std::vector<float> m0(mixes.begin(), mixes.begin() + len), m1(mixes.begin() + len, mixes.end());
  const auto a = extract<float>(model, m0, {&example.faces[0], &example.faces[1]}, false);
  const auto b = extract<float>(model, m1, {&other.faces[1]}, true);
  EXPECT_LT(max_abs_diff(est.data().subspan(0, len), a[0]), 1e-5);
  EXPECT_LT(max_abs_diff(est.data().subspan(len, len), a[1]), 1e-5);
  EXPECT_LT(max_abs_diff(est.data().subspan(2 * len, len), b[0]), 1e-5);
}

TEST_F(PipelineTest, MisalignedFacesAreRejected) {
  auto model = init_model<float>(ModelConfig{}, 4);
  const std::vector<float> mix(example.sample.mixture.begin(), example.sample.mixture.end() - 4000);
  try {
    extract<float>(model, mix, {&example.faces[0]}, true);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlignment);
  }
}

TEST(FullPipeline, GradientMatchesFiniteDifferencesOnMiniatureModel) {
  // The first quarter second of a half-second example.
  DataConfig data;
  data.duration_s = 0.5;
  data.min_turn = 800;
  Example ex = make_example(data, 5, "mini");
  const std::size_t len = 4000;
  ex.sample.mixture.resize(len);
  for (auto &s : ex.sample.sources) s.resize(len);
  for (auto &face : ex.faces) {
    face.n_frames = video_frame_count(len, face.fps);
    face.frames.resize(face.n_frames * face.dims);
  }
  auto model = init_model<double>(mini_config(), 6);
  ExtractRequest<double> req;
  req.mixtures = T64::from({1, ex.length()}, ex.sample.mixture);
  req.faces = stack_streams<double>({&ex.faces[0], &ex.faces[1]});
  req.owner = {0, 0};
  req.isam_bypass = {false};
  std::vector<double> refs(ex.sample.sources[0]);
  refs.insert(refs.end(), ex.sample.sources[1].begin(), ex.sample.sources[1].end());
  const T64 ref = T64::from({2, ex.length()}, refs);
  auto f = [&] { return weighted_neg_si_snr(extract_batch(model, req), ref, {0.5, 0.5}); };
  // The loss is O(10), so central differences carry round-off near 1e-9;
  // gradients below the floor are compared to 1e-8 absolutely. Key biases
  // have exactly zero gradient (softmax shift invariance).
  core::GradCheckOptions options;
  options.max_coords = 8;
  options.floor = 1e-4;
  const auto report = core::finite_diff_check(f, leaves(model), options);
  EXPECT_EQ(report.entries.size(), model.named_parameters().size());
  expect_pass(report);
}

TEST(ConvertModel, RoundTripPreservesValues) {
  auto model = init_model<float>(mini_config(), 7);
  auto wide = convert_model<double>(model);
  auto back = convert_model<float>(wide);
  auto a = model.named_parameters();
  auto b = back.named_parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_EQ(values(*a[i].second), values(*b[i].second));
  }
}

}  // namespace
}  // namespace avse
