// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/visual.h"

#include <algorithm>
#include <cmath>

#include "avse/core/ops.h"
#include "avse/error.h"
#include "avse/init.h"

namespace avse {

std::size_t video_frame_count(std::size_t samples, double fps, std::size_t sample_rate) {
  const double exact = static_cast<double>(samples) * fps / static_cast<double>(sample_rate);
  return static_cast<std::size_t>(std::ceil(exact - 1e-9));
}

VisualStream synth_visual(const std::vector<Interval> &track,
                          std::span<const double> source, std::uint64_t identity_seed,
                          const VisualConfig &config, std::size_t sample_rate) {
  for (const auto &iv : track) {
    if (iv.end > source.size() || iv.start >= iv.end) {
      fail(ErrorCode::kAlignment, "synth_visual: interval [" + std::to_string(iv.start) +
                                      ", " + std::to_string(iv.end) +
                                      ") outside a waveform of " +
                                      std::to_string(source.size()) + " samples");
    }
  }
  VisualStream stream;
  stream.fps = config.fps;
  stream.identity_seed = identity_seed;
  stream.dims = config.dims();
  stream.n_frames = video_frame_count(source.size(), config.fps, sample_rate);
  const std::size_t n = stream.n_frames;
  const double hop = static_cast<double>(sample_rate) / config.fps;

  auto frame_bounds = [&](std::size_t f) {
    const auto a = static_cast<std::size_t>(std::llround(f * hop));
    const auto b = std::min(source.size(), static_cast<std::size_t>(std::llround((f + 1) * hop)));
    return std::pair{a, b};
  };

  // Activity channel: frame log-energy relative to the loudest frame, so it
  // carries no information about the mixing gain.
  std::vector<double> level(n, -config.floor_db);
  std::vector<bool> active(n, false);
  double loudest = -1e300;
  std::vector<double> db(n, -1e300);
  for (std::size_t f = 0; f < n; ++f) {
    const auto [a, b] = frame_bounds(f);
    if (a >= b) continue;
    double e = 0.0;
    for (std::size_t i = a; i < b; ++i) e += source[i] * source[i];
    if (e > 0.0) {
      db[f] = 10.0 * std::log10(e / static_cast<double>(b - a));
      loudest = std::max(loudest, db[f]);
    }
    for (const auto &iv : track) active[f] = active[f] || (iv.start < b && iv.end > a);
  }
  if (loudest > -1e300) {
    for (std::size_t f = 0; f < n; ++f) {
      level[f] = std::clamp(db[f] - loudest, -config.floor_db, 0.0);
    }
  }
  std::vector<double> smooth(n);
  for (std::size_t f = 0; f < n; ++f) {
    const double prev = level[f > 0 ? f - 1 : f];
    const double next = level[f + 1 < n ? f + 1 : f];
    smooth[f] = 0.25 * prev + 0.5 * level[f] + 0.25 * next;
  }

  std::mt19937_64 rng(identity_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> identity(config.identity_dims);
  for (auto &v : identity) v = 0.5 * normal(rng);

  stream.frames.assign(n * stream.dims, 0.0f);
  for (std::size_t f = 0; f < n; ++f) {
    float *row = stream.frames.data() + f * stream.dims;
    for (std::size_t k = 0; k < config.identity_dims; ++k) row[k] = static_cast<float>(identity[k]);
    const double mapped = active[f] ? 1.0 + 2.0 * smooth[f] / config.floor_db : -1.0;
    row[config.energy_channel()] = static_cast<float>(mapped);
    for (std::size_t k = 0; k < config.noise_dims; ++k) {
      row[config.identity_dims + 1 + k] = static_cast<float>(config.noise_amplitude * normal(rng));
    }
  }
  return stream;
}

template <typename Real>
VisualEncoderParams<Real> init_visual_encoder(std::size_t d_vis, std::size_t width,
                                              std::size_t hidden, std::size_t d_emb,
                                              std::mt19937_64 &rng) {
  VisualEncoderParams<Real> p;
  p.w_in = init::uniform_fan_in<Real>({d_vis, width}, rng);
  p.b_in = init::uniform_fan_in<Real>({width}, rng, d_vis);
  p.rnn = core::init_recurrent<Real>(width, hidden, core::Direction::kBidirectional, rng);
  p.w_out = init::uniform_fan_in<Real>({2 * hidden, d_emb}, rng);
  p.b_out = init::uniform_fan_in<Real>({d_emb}, rng, 2 * hidden);
  return p;
}

std::size_t upsample_factor(double latent_rate, double fps) {
  const double ratio = latent_rate / fps;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9) {
    fail(ErrorCode::kConfig, "latent frame rate " + std::to_string(latent_rate) +
                                 " is not an integer multiple of " + std::to_string(fps) +
                                 " fps");
  }
  return static_cast<std::size_t>(rounded);
}

template <typename Real>
core::Tensor<Real> encode_visual(const core::Tensor<Real> &frames,
                                 const VisualEncoderParams<Real> &p, std::size_t factor,
                                 std::size_t latent_frames) {
  if (frames.rank() != 3 || frames.dim(2) != p.w_in.dim(0)) {
    fail(ErrorCode::kDimension, "encode_visual: frames " + core::shape_str(frames.shape()) +
                                    " do not match the encoder input width " +
                                    std::to_string(p.w_in.dim(0)));
  }
  core::Tensor<Real> h = core::relu(core::affine(frames, p.w_in, p.b_in));
  h = core::recurrent_layer(h, p.rnn);
  h = core::affine(h, p.w_out, p.b_out);
  h = core::repeat_axis(h, 1, factor);
  return core::fit_axis(h, 1, latent_frames);
}

template <typename Real>
core::Tensor<Real> stack_streams(const std::vector<const VisualStream *> &streams) {
  if (streams.empty()) fail(ErrorCode::kContract, "no visual streams");
  const std::size_t n = streams[0]->n_frames, d = streams[0]->dims;
  std::vector<Real> data;
  data.reserve(streams.size() * n * d);
  for (const auto *s : streams) {
    if (s->n_frames != n || s->dims != d) {
      fail(ErrorCode::kAlignment, "visual streams differ in length or width");
    }
    data.insert(data.end(), s->frames.begin(), s->frames.end());
  }
  return core::Tensor<Real>::from({streams.size(), n, d}, std::move(data));
}

#define AVSE_INSTANTIATE(Real)                                                         \
  template VisualEncoderParams<Real> init_visual_encoder(std::size_t, std::size_t,      \
                                                         std::size_t, std::size_t,      \
                                                         std::mt19937_64 &);            \
  template core::Tensor<Real> encode_visual(const core::Tensor<Real> &,                 \
                                            const VisualEncoderParams<Real> &,          \
                                            std::size_t, std::size_t);                  \
  template core::Tensor<Real> stack_streams(const std::vector<const VisualStream *> &);

AVSE_INSTANTIATE(float)
AVSE_INSTANTIATE(double)

}  // namespace avse
