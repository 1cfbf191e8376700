// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/gradsuite.h"

#include <chrono>
#include <random>

#include "avse/codec.h"
#include "avse/core/ops.h"
#include "avse/core/recurrent.h"
#include "avse/dataset.h"
#include "avse/extractor.h"
#include "avse/metrics.h"
#include "avse/visual.h"

namespace avse {

namespace {

using core::Shape;
using T64 = core::Tensor<double>;
using Leaves = std::vector<std::pair<std::string, T64>>;
using namespace core;

T64 leaf(const Shape &shape, std::mt19937_64 &rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(numel(shape));
  for (auto &x : v) x = dist(rng);
  return T64::parameter(shape, std::move(v));
}

// Contracts y against fixed random weights.
T64 project(const T64 &y, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> w(y.size());
  for (auto &v : w) v = dist(rng);
  return sum(mul(y, T64::from(y.shape(), std::move(w))));
}

Leaves model_leaves(ExtractorModel<double> &model, const std::string &prefix = "") {
  Leaves out;
  for (auto &[name, t] : model.named_parameters()) {
    if (name.starts_with(prefix)) out.emplace_back(name, *t);
  }
  return out;
}

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

struct Case {
  const char *name;
  bool seeded;
  std::function<GradReport(std::uint64_t, const GradCheckOptions &)> run;
};

std::vector<Case> cases() {
  std::vector<Case> out;
  out.push_back({"elementwise", true, [](std::uint64_t s, const GradCheckOptions &o) {
    std::mt19937_64 rng(s);
    T64 a = leaf({3, 4}, rng), b = leaf({3, 4}, rng, 0.5, 2.0), bias = leaf({4}, rng);
    T64 pos = leaf({3, 4}, rng, 0.2, 3.0);
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
    return finite_diff_check(f, {{"a", a}, {"b", b}, {"bias", bias}, {"pos", pos}}, o);
  }});
  out.push_back({"reductions", true, [](std::uint64_t s, const GradCheckOptions &o) {
    std::mt19937_64 rng(s);
    T64 a = leaf({2, 3, 4}, rng);
    auto f = [=] { return add(project(sum_last(a), s), mean(square(a))); };
    return finite_diff_check(f, {{"a", a}}, o);
  }});
  out.push_back({"matmul_bmm_affine", true, [](std::uint64_t s, const GradCheckOptions &o) {
    std::mt19937_64 rng(s);
    T64 a = leaf({3, 5}, rng), b = leaf({5, 2}, rng), p = leaf({2, 3, 4}, rng);
    T64 q = leaf({2, 4, 3}, rng), qt = leaf({2, 5, 4}, rng), x = leaf({2, 3, 5}, rng);
    T64 w = leaf({5, 6}, rng), bias = leaf({6}, rng);
    auto f = [=] {
      T64 t = project(matmul(a, b), s);
      t = add(t, project(bmm(p, q), s + 1));
      t = add(t, project(bmm(p, qt, true), s + 2));
      t = add(t, project(affine(x, w, bias), s + 3));
      return add(t, project(affine(x, w, T64()), s + 4));
    };
    return finite_diff_check(f, {{"a", a}, {"b", b}, {"p", p}, {"q", q}, {"qt", qt},
                                 {"x", x}, {"w", w}, {"bias", bias}}, o);
  }});
  out.push_back({"shape_ops", true, [](std::uint64_t s, const GradCheckOptions &o) {
    std::mt19937_64 rng(s);
    T64 a = leaf({2, 3, 4}, rng), b = leaf({2, 3, 2}, rng), rows = leaf({2, 3, 4}, rng);
    auto f = [=] {
      T64 t = project(reshape(a, {6, 4}), s);
      t = add(t, project(permute(a, {2, 0, 1}), s + 1));
      t = add(t, project(concat_last<double>({a, b}), s + 2));
      t = add(t, project(stack<double>({a, rows}), s + 3));
      t = add(t, project(fit_axis(a, 1, 2), s + 4));
      t = add(t, project(fit_axis(a, 1, 5), s + 5));
      t = add(t, project(repeat_axis(a, 1, 3), s + 6));
      t = add(t, project(gather_rows(a, {1, 0, 1}), s + 7));
      T64 base = reshape(concat_last<double>({a, a}), {4, 3, 4});
      return add(t, project(scatter_rows(base, {3, 0}, rows), s + 8));
    };
    return finite_diff_check(f, {{"a", a}, {"b", b}, {"rows", rows}}, o);
  }});
  out.push_back({"softmax_layer_norm", true, [](std::uint64_t s, const GradCheckOptions &o) {
    std::mt19937_64 rng(s);
    T64 x = leaf({3, 4, 5}, rng, -2.0, 2.0), gamma = leaf({5}, rng), beta = leaf({5}, rng);
    auto f = [=] {
      T64 t = project(softmax(x, 1), s);
      t = add(t, project(softmax(x, -1), s + 1));
      return add(t, project(layer_norm(x, gamma, beta, 1e-5), s + 2));
    };
    return finite_diff_check(f, {{"x", x}, {"gamma", gamma}, {"beta", beta}}, o);
  }});
  out.push_back({"convolutions", true, [](std::uint64_t s, const GradCheckOptions &o) {
    std::mt19937_64 rng(s);
    T64 x = leaf({2, 3, 23}, rng), w = leaf({4, 3, 5}, rng);
    T64 z = leaf({2, 4, 6}, rng), v = leaf({4, 2, 5}, rng);
    auto f = [=] {
      return add(project(conv1d(x, w, 3), s), project(conv_transpose1d(z, v, 2), s + 1));
    };
    return finite_diff_check(f, {{"x", x}, {"w", w}, {"z", z}, {"v", v}}, o);
  }});
  out.push_back({"chunking", true, [](std::uint64_t s, const GradCheckOptions &o) {
    std::mt19937_64 rng(s);
    T64 x = leaf({2, 13, 3}, rng);
    auto f = [=] {
      T64 c = segment_chunks(x, 4, 2);
      return add(project(c, s), project(merge_chunks(square(c), chunk_layout(13, 4, 2)), s + 1));
    };
    return finite_diff_check(f, {{"x", x}}, o);
  }});
  out.push_back({"recurrent", true, [](std::uint64_t s, const GradCheckOptions &o) {
    std::mt19937_64 rng(s);
    auto p = init_recurrent<double>(3, 4, Direction::kBidirectional, rng);
    T64 x = leaf({2, 6, 3}, rng);
    auto f = [=] { return project(recurrent_layer(x, p), s); };
    return finite_diff_check(
        f, {{"x", x}, {"f.w_ih", p.forward.w_ih}, {"f.w_hh", p.forward.w_hh},
            {"f.b_ih", p.forward.b_ih}, {"f.b_hh", p.forward.b_hh},
            {"b.w_ih", p.backward.w_ih}, {"b.w_hh", p.backward.w_hh},
            {"b.b_ih", p.backward.b_ih}, {"b.b_hh", p.backward.b_hh}}, o);
  }});
  out.push_back({"si_snr_loss", true, [](std::uint64_t s, const GradCheckOptions &o) {
    std::mt19937_64 rng(s);
    T64 est = leaf({3, 16}, rng);
    std::mt19937_64 ref_rng(s + 100);
    const T64 ref = leaf({3, 16}, ref_rng).detach();
    auto f = [=] { return weighted_neg_si_snr(est, ref, {0.5, 0.25, 0.25}); };
    return finite_diff_check(f, {{"est", est}}, o);
  }});
  out.push_back({"codec", true, [](std::uint64_t s, const GradCheckOptions &o) {
    std::mt19937_64 rng(s);
    auto codec = init_codec<double>({40, 20, 6}, rng);
    T64 wave = leaf({2, 170}, rng);
    auto f = [=] {
      LatentFrames<double> lat = encode(wave, codec);
      lat.frames = square(lat.frames);
      return project(decode(lat, codec), s);
    };
    return finite_diff_check(
        f, {{"wave", wave}, {"analysis", codec.analysis}, {"synthesis", codec.synthesis}}, o);
  }});
  out.push_back({"visual_encoder", true, [](std::uint64_t s, const GradCheckOptions &o) {
    std::mt19937_64 rng(s);
    auto p = init_visual_encoder<double>(5, 6, 3, 4, rng);
    T64 frames = leaf({2, 4, 5}, rng);
    auto f = [=] { return project(encode_visual(frames, p, 3, 11), s); };
    return finite_diff_check(
        f, {{"frames", frames}, {"w_in", p.w_in}, {"b_in", p.b_in}, {"rnn.f.w_ih", p.rnn.forward.w_ih},
            {"rnn.f.w_hh", p.rnn.forward.w_hh}, {"rnn.b.w_ih", p.rnn.backward.w_ih},
            {"w_out", p.w_out}, {"b_out", p.b_out}}, o);
  }});
  out.push_back({"fusion", true, [](std::uint64_t s, const GradCheckOptions &o) {
    auto model = init_model<double>(mini_config(), s);
    std::mt19937_64 rng(s);
    T64 audio = leaf({3, 12, 8}, rng), visual = leaf({3, 12, 8}, rng);
    auto f = [=] { return project(fuse_visual(audio, visual, model.fusion_w, model.fusion_b), s); };
    return finite_diff_check(
        f, {{"audio", audio}, {"visual", visual}, {"w", model.fusion_w}, {"b", model.fusion_b}}, o);
  }});
  out.push_back({"dual_path", true, [](std::uint64_t s, const GradCheckOptions &o) {
    auto model = init_model<double>(mini_config(), s);
    std::mt19937_64 rng(s);
    T64 x = leaf({2, 23, 8}, rng);
    auto f = [=, &model] { return project(dual_path_block(x, model.blocks[0], model.config), s); };
    Leaves leaves = model_leaves(model, "block0.");
    leaves.emplace_back("x", x);
    GradCheckOptions opt = o;
    opt.max_coords = 40;
    return finite_diff_check(f, leaves, opt);
  }});
  out.push_back({"isam", true, [](std::uint64_t s, const GradCheckOptions &o) {
    auto model = init_model<double>(mini_config(), s);
    std::mt19937_64 rng(s);
    T64 x = leaf({5, 6, 8}, rng);
    const std::vector<std::vector<std::size_t>> sets{{0, 2}, {1, 3, 4}};
    auto f = [=, &model] { return project(isam_apply(x, sets, model.isam[0], 1e-5), s); };
    Leaves leaves = model_leaves(model, "isam0.");
    leaves.emplace_back("x", x);
    // Key biases have exactly zero gradient (softmax shift invariance);
    // the floor keeps their round-off from being compared relatively.
    GradCheckOptions opt = o;
    opt.floor = 1e-5;
    return finite_diff_check(f, leaves, opt);
  }});
  out.push_back({"pipeline", false, [](std::uint64_t s, const GradCheckOptions &o) {
    // R = 1, d_emb = 8 on the first quarter second of a two-speaker example.
    DataConfig data;
    data.duration_s = 0.5;
    data.min_turn = 800;
    Example ex = make_example(data, s + 5, "mini");
    const std::size_t len = 4000;
    ex.sample.mixture.resize(len);
    for (auto &src : ex.sample.sources) src.resize(len);
    for (auto &face : ex.faces) {
      face.n_frames = video_frame_count(len, face.fps);
      face.frames.resize(face.n_frames * face.dims);
    }
    auto model = init_model<double>(mini_config(), s + 6);
    ExtractRequest<double> req;
    req.mixtures = T64::from({1, len}, ex.sample.mixture);
    req.faces = stack_streams<double>({&ex.faces[0], &ex.faces[1]});
    req.owner = {0, 0};
    req.isam_bypass = {false};
    std::vector<double> refs(ex.sample.sources[0]);
    refs.insert(refs.end(), ex.sample.sources[1].begin(), ex.sample.sources[1].end());
    const T64 ref = T64::from({2, len}, refs);
    auto f = [&] { return weighted_neg_si_snr(extract_batch(model, req), ref, {0.5, 0.5}); };
    // The loss is O(10): central differences carry round-off near 1e-9, so
    // gradients below the floor are compared absolutely.
    GradCheckOptions opt = o;
    opt.max_coords = 8;
    opt.floor = 1e-4;
    return finite_diff_check(f, model_leaves(model), opt);
  }});
  return out;
}

}  // namespace

std::vector<SuiteCase> run_gradient_suite(const SuiteOptions &options,
                                          const std::function<void(const SuiteCase &)> &on_case) {
  GradCheckOptions check;
  check.tolerance = options.tolerance;
  std::vector<SuiteCase> results;
  for (const Case &c : cases()) {
    const std::size_t draws = c.seeded ? options.seeds : 1;
    for (std::size_t k = 0; k < draws; ++k) {
      SuiteCase r;
      r.name = c.name;
      r.seed = k;
      const auto start = std::chrono::steady_clock::now();
      r.report = c.run(k, check);
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (on_case) on_case(r);
      results.push_back(std::move(r));
    }
  }
  return results;
}

}  // namespace avse
