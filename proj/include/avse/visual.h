// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Synthetic face streams and the visual encoder.
//
// A stream frame holds a constant identity code, a speech-activity channel
// derived from the speaker's own frame energy, and low-amplitude noise.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "avse/core/recurrent.h"
#include "avse/core/tensor.h"
#include "avse/mixsim.h"

namespace avse {

struct VisualConfig {
  double fps = 25.0;
  std::size_t identity_dims = 16;
  std::size_t noise_dims = 8;
  double noise_amplitude = 0.05;
  // Dynamic range of the activity channel below the stream's loudest frame.
  double floor_db = 40.0;

  std::size_t dims() const { return identity_dims + 1 + noise_dims; }
  std::size_t energy_channel() const { return identity_dims; }
};

struct VisualStream {
  std::vector<float> frames;  // [n_frames, dims] row-major
  std::size_t n_frames = 0;
  std::size_t dims = 0;
  double fps = 25.0;
  std::uint64_t identity_seed = 0;

  float at(std::size_t frame, std::size_t dim) const { return frames[frame * dims + dim]; }
};

// Video frames covering `samples` of audio: ceil(samples * fps / rate).
std::size_t video_frame_count(std::size_t samples, double fps,
                              std::size_t sample_rate = kSampleRate);

VisualStream synth_visual(const std::vector<Interval> &track,
                          std::span<const double> source, std::uint64_t identity_seed,
                          const VisualConfig &config = {},
                          std::size_t sample_rate = kSampleRate);

template <typename Real>
struct VisualEncoderParams {
  core::Tensor<Real> w_in, b_in;    // [d_vis, width], [width]
  core::RecurrentParams<Real> rnn;  // width -> 2 * hidden
  core::Tensor<Real> w_out, b_out;  // [2 * hidden, d_emb], [d_emb]
};

template <typename Real>
VisualEncoderParams<Real> init_visual_encoder(std::size_t d_vis, std::size_t width,
                                              std::size_t hidden, std::size_t d_emb,
                                              std::mt19937_64 &rng);

// Integer number of latent frames per video frame; throws a configuration
// error when the rates are not commensurate.
std::size_t upsample_factor(double latent_rate, double fps);

// frames [S, T_video, d_vis] -> [S, latent_frames, d_emb]: per-frame affine
// and ReLU, bidirectional recurrence at the video rate, projection, then
// repetition to the latent rate and trim/pad to latent_frames.
template <typename Real>
core::Tensor<Real> encode_visual(const core::Tensor<Real> &frames,
                                 const VisualEncoderParams<Real> &params,
                                 std::size_t factor, std::size_t latent_frames);

// Stacks streams into [S, T_video, d_vis].
template <typename Real>
core::Tensor<Real> stack_streams(const std::vector<const VisualStream *> &streams);

}  // namespace avse
