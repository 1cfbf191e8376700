// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Audio-visual speaker extractor with an inter-speaker attention module
// (ISAM) after every dual-path block.
//
// Every face shown to the model opens one extraction branch ("group").
// Branches of the same mixture share the encoded mixture and are processed
// independently by the backbone; ISAM is the only place where they exchange
// information, attending across the branches of one mixture frame by frame.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "avse/codec.h"
#include "avse/core/recurrent.h"
#include "avse/visual.h"

namespace avse {

struct ModelConfig {
  CodecGeometry codec;
  std::size_t d_emb = 64;
  std::size_t repeats = 2;
  std::size_t chunk_size = 50;
  std::size_t chunk_hop = 25;
  std::size_t rnn_hidden = 32;
  std::size_t visual_dims = 25;
  std::size_t visual_width = 1024;
  std::size_t visual_hidden = 192;
  double fps = 25.0;
  std::size_t sample_rate = kSampleRate;
  double norm_eps = 1e-5;

  // Throws a configuration error on inconsistent values.
  void validate() const;
  double latent_rate() const {
    return static_cast<double>(sample_rate) / static_cast<double>(codec.stride);
  }
};

template <typename Real>
struct NormParams {
  core::Tensor<Real> gamma, beta;
};

template <typename Real>
struct DualPathParams {
  core::RecurrentParams<Real> intra, inter;
  core::Tensor<Real> intra_w, intra_b;  // [2H, d], [d]
  core::Tensor<Real> inter_w, inter_b;
  NormParams<Real> intra_norm, inter_norm;
};

template <typename Real>
struct IsamParams {
  core::Tensor<Real> wq, bq, wk, bk, wv, bv, wo, bo;  // [d, d], [d]
  core::Tensor<Real> ff1_w, ff1_b;                    // [d, 2d], [2d]
  core::Tensor<Real> ff2_w, ff2_b;                    // [2d, d], [d]
  NormParams<Real> norm;
};

template <typename Real>
struct ExtractorModel {
  ModelConfig config;
  CodecParams<Real> codec;
  NormParams<Real> input_norm;
  core::Tensor<Real> bottleneck_w, bottleneck_b;  // [F, d], [d]
  VisualEncoderParams<Real> visual;
  core::Tensor<Real> fusion_w, fusion_b;          // [2d, d], [d]
  std::vector<DualPathParams<Real>> blocks;
  std::vector<IsamParams<Real>> isam;
  core::Tensor<Real> mask_w, mask_b;              // [d, F], [F]

  // Stable names in a fixed order; used by the optimizer and checkpoints.
  std::vector<std::pair<std::string, core::Tensor<Real> *>> named_parameters();
  std::size_t parameter_count();
  std::size_t isam_parameter_count();
};

template <typename Real>
ExtractorModel<Real> init_model(const ModelConfig &config, std::uint64_t seed);

// Converts a model between element types, keeping parameter values.
template <typename To, typename From>
ExtractorModel<To> convert_model(ExtractorModel<From> &model);

// Per-speaker embeddings of one mixture; speaker 0 is the target.
template <typename Real>
struct SpeakerBatch {
  core::Tensor<Real> embeddings;  // [S, T, d]
  std::vector<bool> presence;     // size S, presence[0] is true
};

// Applies ISAM to every speaker set. `x` is [G, T, d]; each set lists the
// group rows of one mixture that attend to each other. Rows outside every
// set are returned unchanged.
template <typename Real>
core::Tensor<Real> isam_apply(const core::Tensor<Real> &x,
                              const std::vector<std::vector<std::size_t>> &sets,
                              const IsamParams<Real> &params, Real eps);

template <typename Real>
SpeakerBatch<Real> isam_forward(const SpeakerBatch<Real> &batch,
                                const IsamParams<Real> &params, bool bypass,
                                Real eps = Real(1e-5));

// x [G, T, d] -> [G, T, d]
template <typename Real>
core::Tensor<Real> dual_path_block(const core::Tensor<Real> &x,
                                   const DualPathParams<Real> &params,
                                   const ModelConfig &config);

// audio, visual [G, T, d] -> [G, T, d]
template <typename Real>
core::Tensor<Real> fuse_visual(const core::Tensor<Real> &audio,
                               const core::Tensor<Real> &visual,
                               const core::Tensor<Real> &w, const core::Tensor<Real> &b);

// A batch of mixtures and the faces shown for each of them.
template <typename Real>
struct ExtractRequest {
  core::Tensor<Real> mixtures;       // [B, L]
  core::Tensor<Real> faces;          // [G, T_video, d_vis]
  std::vector<std::size_t> owner;    // owner[g]: mixture of face g
  std::vector<bool> isam_bypass;     // per mixture
};

// Returns one estimate per face: [G, L].
template <typename Real>
core::Tensor<Real> extract_batch(ExtractorModel<Real> &model, const ExtractRequest<Real> &request);

// Single-mixture convenience form: one waveform per visual stream.
template <typename Real>
std::vector<std::vector<Real>> extract(ExtractorModel<Real> &model, std::span<const Real> mixture,
                                       const std::vector<const VisualStream *> &visuals,
                                       bool isam_bypass);

}  // namespace avse
