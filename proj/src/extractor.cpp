// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/extractor.h"

#include <cmath>
#include <map>

#include "avse/core/ops.h"
#include "avse/error.h"
#include "avse/init.h"

namespace avse {

namespace ops = core;
using core::Tensor;

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string &what) {
    if (!ok) fail(ErrorCode::kConfig, what);
  };
  require(codec.kernel > 0 && codec.stride > 0 && codec.filters > 0,
          "codec kernel, stride and filters must be positive");
  require(d_emb > 0, "d_emb must be positive");
  require(repeats >= 1, "repeats must be at least 1");
  require(chunk_size > 0 && chunk_size % 2 == 0, "chunk_size must be a positive even number");
  require(chunk_hop * 2 == chunk_size, "chunk_hop must be half of chunk_size");
  require(rnn_hidden > 0 && visual_width > 0 && visual_hidden > 0,
          "hidden sizes must be positive");
  require(visual_dims > 0, "visual_dims must be positive");
  require(fps > 0.0 && sample_rate > 0, "rates must be positive");
  require(norm_eps > 0.0, "norm_eps must be positive");
  upsample_factor(latent_rate(), fps);
}

namespace {

template <typename Real>
NormParams<Real> init_norm(std::size_t d) {
  return {init::constant<Real>({d}, Real(1)), init::constant<Real>({d}, Real(0))};
}

template <typename Real>
void add_gru(std::vector<std::pair<std::string, Tensor<Real> *>> &out, const std::string &prefix,
             core::GruParams<Real> &g) {
  out.emplace_back(prefix + ".w_ih", &g.w_ih);
  out.emplace_back(prefix + ".w_hh", &g.w_hh);
  out.emplace_back(prefix + ".b_ih", &g.b_ih);
  out.emplace_back(prefix + ".b_hh", &g.b_hh);
}

template <typename Real>
void add_rnn(std::vector<std::pair<std::string, Tensor<Real> *>> &out, const std::string &prefix,
             core::RecurrentParams<Real> &r) {
  add_gru(out, prefix + ".fwd", r.forward);
  if (r.direction == core::Direction::kBidirectional) add_gru(out, prefix + ".bwd", r.backward);
}

template <typename Real>
void add_norm(std::vector<std::pair<std::string, Tensor<Real> *>> &out, const std::string &prefix,
              NormParams<Real> &n) {
  out.emplace_back(prefix + ".gamma", &n.gamma);
  out.emplace_back(prefix + ".beta", &n.beta);
}

template <typename Real>
Tensor<Real> norm(const Tensor<Real> &x, const NormParams<Real> &n, Real eps) {
  return ops::layer_norm(x, n.gamma, n.beta, eps);
}

}  // namespace

template <typename Real>
std::vector<std::pair<std::string, Tensor<Real> *>> ExtractorModel<Real>::named_parameters() {
  std::vector<std::pair<std::string, Tensor<Real> *>> out;
  out.emplace_back("codec.analysis", &codec.analysis);
  out.emplace_back("codec.synthesis", &codec.synthesis);
  add_norm(out, "input_norm", input_norm);
  out.emplace_back("bottleneck.w", &bottleneck_w);
  out.emplace_back("bottleneck.b", &bottleneck_b);
  out.emplace_back("visual.in.w", &visual.w_in);
  out.emplace_back("visual.in.b", &visual.b_in);
  add_rnn(out, "visual.rnn", visual.rnn);
  out.emplace_back("visual.out.w", &visual.w_out);
  out.emplace_back("visual.out.b", &visual.b_out);
  out.emplace_back("fusion.w", &fusion_w);
  out.emplace_back("fusion.b", &fusion_b);
  for (std::size_t r = 0; r < blocks.size(); ++r) {
    const std::string p = "block" + std::to_string(r);
    auto &b = blocks[r];
    add_rnn(out, p + ".intra.rnn", b.intra);
    out.emplace_back(p + ".intra.w", &b.intra_w);
    out.emplace_back(p + ".intra.b", &b.intra_b);
    add_norm(out, p + ".intra.norm", b.intra_norm);
    add_rnn(out, p + ".inter.rnn", b.inter);
    out.emplace_back(p + ".inter.w", &b.inter_w);
    out.emplace_back(p + ".inter.b", &b.inter_b);
    add_norm(out, p + ".inter.norm", b.inter_norm);
  }
  for (std::size_t r = 0; r < isam.size(); ++r) {
    const std::string p = "isam" + std::to_string(r);
    auto &m = isam[r];
    out.emplace_back(p + ".q.w", &m.wq);
    out.emplace_back(p + ".q.b", &m.bq);
    out.emplace_back(p + ".k.w", &m.wk);
    out.emplace_back(p + ".k.b", &m.bk);
    out.emplace_back(p + ".v.w", &m.wv);
    out.emplace_back(p + ".v.b", &m.bv);
    out.emplace_back(p + ".o.w", &m.wo);
    out.emplace_back(p + ".o.b", &m.bo);
    out.emplace_back(p + ".ff1.w", &m.ff1_w);
    out.emplace_back(p + ".ff1.b", &m.ff1_b);
    out.emplace_back(p + ".ff2.w", &m.ff2_w);
    out.emplace_back(p + ".ff2.b", &m.ff2_b);
    add_norm(out, p + ".norm", m.norm);
  }
  out.emplace_back("mask.w", &mask_w);
  out.emplace_back("mask.b", &mask_b);
  return out;
}

template <typename Real>
std::size_t ExtractorModel<Real>::parameter_count() {
  std::size_t n = 0;
  for (const auto &[name, t] : named_parameters()) n += t->size();
  return n;
}

template <typename Real>
std::size_t ExtractorModel<Real>::isam_parameter_count() {
  std::size_t n = 0;
  for (const auto &[name, t] : named_parameters()) {
    if (name.rfind("isam", 0) == 0) n += t->size();
  }
  return n;
}

template <typename Real>
ExtractorModel<Real> init_model(const ModelConfig &config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = config.d_emb, f = config.codec.filters, h = config.rnn_hidden;
  auto affine_w = [&](std::size_t in, std::size_t out) {
    return init::uniform_fan_in<Real>({in, out}, rng);
  };
  auto affine_b = [&](std::size_t in, std::size_t out) {
    return init::uniform_fan_in<Real>({out}, rng, in);
  };
  ExtractorModel<Real> m;
  m.config = config;
  m.codec = init_codec<Real>(config.codec, rng);
  m.input_norm = init_norm<Real>(f);
  m.bottleneck_w = affine_w(f, d);
  m.bottleneck_b = affine_b(f, d);
  m.visual = init_visual_encoder<Real>(config.visual_dims, config.visual_width,
                                       config.visual_hidden, d, rng);
  m.fusion_w = affine_w(2 * d, d);
  m.fusion_b = affine_b(2 * d, d);
  for (std::size_t r = 0; r < config.repeats; ++r) {
    DualPathParams<Real> b;
    b.intra = core::init_recurrent<Real>(d, h, core::Direction::kBidirectional, rng);
    b.intra_w = affine_w(2 * h, d);
    b.intra_b = affine_b(2 * h, d);
    b.intra_norm = init_norm<Real>(d);
    b.inter = core::init_recurrent<Real>(d, h, core::Direction::kBidirectional, rng);
    b.inter_w = affine_w(2 * h, d);
    b.inter_b = affine_b(2 * h, d);
    b.inter_norm = init_norm<Real>(d);
    m.blocks.push_back(std::move(b));

    IsamParams<Real> a;
    a.wq = affine_w(d, d);
    a.bq = affine_b(d, d);
    a.wk = affine_w(d, d);
    a.bk = affine_b(d, d);
    a.wv = affine_w(d, d);
    a.bv = affine_b(d, d);
    a.wo = affine_w(d, d);
    a.bo = affine_b(d, d);
    a.ff1_w = affine_w(d, 2 * d);
    a.ff1_b = affine_b(d, 2 * d);
    a.ff2_w = affine_w(2 * d, d);
    a.ff2_b = affine_b(2 * d, d);
    a.norm = init_norm<Real>(d);
    m.isam.push_back(std::move(a));
  }
  m.mask_w = affine_w(d, f);
  m.mask_b = affine_b(d, f);
  return m;
}

template <typename To, typename From>
ExtractorModel<To> convert_model(ExtractorModel<From> &model) {
  ExtractorModel<To> out = init_model<To>(model.config, 0);
  auto src = model.named_parameters();
  auto dst = out.named_parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto values = src[i].second->data();
    auto target = dst[i].second->mutable_data();
    for (std::size_t j = 0; j < values.size(); ++j) target[j] = static_cast<To>(values[j]);
  }
  return out;
}

template <typename Real>
Tensor<Real> isam_apply(const Tensor<Real> &x, const std::vector<std::vector<std::size_t>> &sets,
                        const IsamParams<Real> &p, Real eps) {
  if (x.rank() != 3) {
    fail(ErrorCode::kDimension, "isam: expected [G, T, d], got " + core::shape_str(x.shape()));
  }
  const std::size_t steps = x.dim(1), d = x.dim(2);
  // Sets of equal size are processed together.
  std::map<std::size_t, std::vector<std::size_t>> by_size;
  for (const auto &set : sets) {
    if (set.empty()) fail(ErrorCode::kContract, "isam: empty speaker set");
    auto &rows = by_size[set.size()];
    rows.insert(rows.end(), set.begin(), set.end());
  }
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(d));
  Tensor<Real> out = x;
  for (const auto &[n, rows] : by_size) {
    const std::size_t m = rows.size() / n;
    // [m * n, T, d] -> [m * T, n, d]: one attention problem per frame.
    Tensor<Real> xs = ops::reshape(ops::gather_rows(x, rows), {m, n, steps, d});
    xs = ops::reshape(ops::permute(xs, {0, 2, 1, 3}), {m * steps, n, d});
    const Tensor<Real> q = ops::affine(xs, p.wq, p.bq);
    const Tensor<Real> k = ops::affine(xs, p.wk, p.bk);
    const Tensor<Real> v = ops::affine(xs, p.wv, p.bv);
    const Tensor<Real> weights = ops::softmax(ops::mul_scalar(ops::bmm(q, k, true), scale), 2);
    Tensor<Real> y = ops::add(xs, ops::affine(ops::bmm(weights, v), p.wo, p.bo));
    const Tensor<Real> ff =
        ops::affine(ops::relu(ops::affine(y, p.ff1_w, p.ff1_b)), p.ff2_w, p.ff2_b);
    y = ops::layer_norm(ops::add(y, ff), p.norm.gamma, p.norm.beta, eps);
    y = ops::reshape(ops::permute(ops::reshape(y, {m, steps, n, d}), {0, 2, 1, 3}),
                     {m * n, steps, d});
    out = ops::scatter_rows(out, rows, y);
  }
  return out;
}

template <typename Real>
SpeakerBatch<Real> isam_forward(const SpeakerBatch<Real> &batch, const IsamParams<Real> &params,
                                bool bypass, Real eps) {
  const auto &x = batch.embeddings;
  if (!x.defined() || x.rank() != 3 || x.dim(0) == 0) {
    fail(ErrorCode::kContract, "isam: at least one speaker is required");
  }
  if (batch.presence.size() != x.dim(0) || !batch.presence[0]) {
    fail(ErrorCode::kContract, "isam: presence mask must cover every speaker and keep the target");
  }
  if (bypass) return batch;
  std::vector<std::size_t> present;
  for (std::size_t s = 0; s < batch.presence.size(); ++s) {
    if (batch.presence[s]) present.push_back(s);
  }
  return {isam_apply(x, {present}, params, eps), batch.presence};
}

template <typename Real>
Tensor<Real> dual_path_block(const Tensor<Real> &x, const DualPathParams<Real> &p,
                             const ModelConfig &config) {
  if (x.rank() != 3) {
    fail(ErrorCode::kDimension, "dual_path_block: expected [G, T, d], got " +
                                    core::shape_str(x.shape()));
  }
  const std::size_t groups = x.dim(0), d = x.dim(2);
  const std::size_t k = config.chunk_size;
  const auto eps = static_cast<Real>(config.norm_eps);
  const core::ChunkLayout layout = core::chunk_layout(x.dim(1), k, config.chunk_hop);
  const std::size_t c = layout.n_chunks;

  // Intra-chunk: sequences of length K, one per (group, chunk).
  Tensor<Real> chunks = ops::segment_chunks(x, k, config.chunk_hop);  // [G, C, K, d]
  Tensor<Real> intra = ops::recurrent_layer(ops::reshape(chunks, {groups * c, k, d}), p.intra);
  intra = ops::affine(intra, p.intra_w, p.intra_b);
  chunks = ops::add(chunks, norm(ops::reshape(intra, {groups, c, k, d}), p.intra_norm, eps));

  // Inter-chunk: sequences of length C, one per (group, in-chunk position).
  Tensor<Real> across = ops::permute(chunks, {0, 2, 1, 3});  // [G, K, C, d]
  Tensor<Real> inter = ops::recurrent_layer(ops::reshape(across, {groups * k, c, d}), p.inter);
  inter = ops::affine(inter, p.inter_w, p.inter_b);
  across = ops::add(across, norm(ops::reshape(inter, {groups, k, c, d}), p.inter_norm, eps));

  return ops::merge_chunks(ops::permute(across, {0, 2, 1, 3}), layout);
}

template <typename Real>
Tensor<Real> fuse_visual(const Tensor<Real> &audio, const Tensor<Real> &visual,
                         const Tensor<Real> &w, const Tensor<Real> &b) {
  if (audio.shape() != visual.shape()) {
    fail(ErrorCode::kAlignment, "fuse_visual: audio " + core::shape_str(audio.shape()) +
                                    " and visual " + core::shape_str(visual.shape()) +
                                    " are not aligned");
  }
  return ops::relu(ops::affine(ops::concat_last<Real>({audio, visual}), w, b));
}

template <typename Real>
Tensor<Real> extract_batch(ExtractorModel<Real> &model, const ExtractRequest<Real> &request) {
  const ModelConfig &cfg = model.config;
  const auto &mix = request.mixtures;
  if (mix.rank() != 2) {
    fail(ErrorCode::kDimension, "extract: mixtures must be [B, L], got " +
                                    core::shape_str(mix.shape()));
  }
  const std::size_t batch = mix.dim(0), len = mix.dim(1);
  const auto &faces = request.faces;
  if (faces.rank() != 3 || faces.dim(0) == 0 || faces.dim(0) != request.owner.size()) {
    fail(ErrorCode::kContract, "extract: need at least one face and one owner per face");
  }
  if (request.isam_bypass.size() != batch) {
    fail(ErrorCode::kContract, "extract: need one bypass flag per mixture");
  }
  const std::size_t expected_video = video_frame_count(len, cfg.fps, cfg.sample_rate);
  if (faces.dim(1) != expected_video) {
    fail(ErrorCode::kAlignment, "extract: " + std::to_string(faces.dim(1)) +
                                    " video frames for a mixture needing " +
                                    std::to_string(expected_video));
  }
  std::vector<std::vector<std::size_t>> sets(batch);
  for (std::size_t g = 0; g < request.owner.size(); ++g) {
    if (request.owner[g] >= batch) fail(ErrorCode::kContract, "extract: face owner out of range");
    sets[request.owner[g]].push_back(g);
  }
  std::vector<std::vector<std::size_t>> attend;
  for (std::size_t b = 0; b < batch; ++b) {
    if (!request.isam_bypass[b] && !sets[b].empty()) attend.push_back(sets[b]);
  }
  const auto eps = static_cast<Real>(cfg.norm_eps);

  const LatentFrames<Real> enc = encode(mix, model.codec);
  const std::size_t frames = enc.frames.dim(2);
  const Tensor<Real> latent = ops::permute(enc.frames, {0, 2, 1});  // [B, T, F]
  const Tensor<Real> audio =
      ops::affine(norm(latent, model.input_norm, eps), model.bottleneck_w, model.bottleneck_b);

  const Tensor<Real> visual =
      encode_visual(faces, model.visual, upsample_factor(cfg.latent_rate(), cfg.fps), frames);
  Tensor<Real> x = fuse_visual(ops::gather_rows(audio, request.owner), visual, model.fusion_w,
                               model.fusion_b);
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    x = dual_path_block(x, model.blocks[r], cfg);
    if (!attend.empty()) x = isam_apply(x, attend, model.isam[r], eps);
  }
  const Tensor<Real> mask = ops::relu(ops::affine(x, model.mask_w, model.mask_b));
  LatentFrames<Real> est;
  est.frames = ops::permute(ops::mul(mask, ops::gather_rows(latent, request.owner)), {0, 2, 1});
  est.frame_stride = enc.frame_stride;
  est.kernel_len = enc.kernel_len;
  est.source_len = len;
  return decode(est, model.codec);
}

template <typename Real>
std::vector<std::vector<Real>> extract(ExtractorModel<Real> &model, std::span<const Real> mixture,
                                       const std::vector<const VisualStream *> &visuals,
                                       bool isam_bypass) {
  if (visuals.empty()) fail(ErrorCode::kContract, "extract: at least one visual stream is required");
  ExtractRequest<Real> request;
  request.mixtures = Tensor<Real>::from({1, mixture.size()},
                                        std::vector<Real>(mixture.begin(), mixture.end()));
  request.faces = stack_streams<Real>(visuals);
  request.owner.assign(visuals.size(), 0);
  request.isam_bypass = {isam_bypass};
  const Tensor<Real> est = extract_batch(model, request);
  std::vector<std::vector<Real>> out(visuals.size());
  for (std::size_t g = 0; g < visuals.size(); ++g) {
    const auto row = est.data().subspan(g * mixture.size(), mixture.size());
    out[g].assign(row.begin(), row.end());
  }
  return out;
}

#define AVSE_INSTANTIATE(Real)                                                              \
  template struct ExtractorModel<Real>;                                                     \
  template ExtractorModel<Real> init_model(const ModelConfig &, std::uint64_t);            \
  template Tensor<Real> isam_apply(const Tensor<Real> &,                                    \
                                   const std::vector<std::vector<std::size_t>> &,           \
                                   const IsamParams<Real> &, Real);                         \
  template SpeakerBatch<Real> isam_forward(const SpeakerBatch<Real> &,                      \
                                           const IsamParams<Real> &, bool, Real);           \
  template Tensor<Real> dual_path_block(const Tensor<Real> &, const DualPathParams<Real> &, \
                                        const ModelConfig &);                               \
  template Tensor<Real> fuse_visual(const Tensor<Real> &, const Tensor<Real> &,             \
                                    const Tensor<Real> &, const Tensor<Real> &);            \
  template Tensor<Real> extract_batch(ExtractorModel<Real> &, const ExtractRequest<Real> &); \
  template std::vector<std::vector<Real>> extract(ExtractorModel<Real> &,                   \
                                                  std::span<const Real>,                    \
                                                  const std::vector<const VisualStream *> &, \
                                                  bool);

AVSE_INSTANTIATE(float)
AVSE_INSTANTIATE(double)
template ExtractorModel<double> convert_model(ExtractorModel<float> &);
template ExtractorModel<float> convert_model(ExtractorModel<double> &);

}  // namespace avse
