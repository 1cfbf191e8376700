// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Synthetic audio-visual examples: a mixture, its clean sources and one face
// stream per speaker. Every example is a pure function of its seed.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avse/mixsim.h"
#include "avse/visual.h"

namespace avse {

struct DataConfig {
  std::size_t speakers = 2;
  double duration_s = 2.0;
  double overlap = 0.3;
  bool sparse = true;
  double snr_low_db = -10.0;
  double snr_high_db = 10.0;
  std::size_t min_turn = 1600;
  VisualConfig visual;

  void validate() const;
};

struct Example {
  std::string id;
  std::uint64_t seed = 0;
  MixtureSample sample;
  std::vector<VisualStream> faces;  // one per speaker, speaker 0 first

  std::size_t speakers() const { return sample.sources.size(); }
  std::size_t length() const { return sample.mixture.size(); }
};

Example make_example(const DataConfig &config, std::uint64_t seed, const std::string &id);

// Examples `offset .. offset + count - 1` of the stream seeded by `seed`.
std::vector<Example> make_dataset(const DataConfig &config, std::size_t count,
                                  std::uint64_t seed, std::size_t offset = 0);

}  // namespace avse
