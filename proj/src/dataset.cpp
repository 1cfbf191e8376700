// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/dataset.h"

#include <cmath>
#include <random>

#include "avse/error.h"

namespace avse {

void DataConfig::validate() const {
  if (speakers < 2) fail(ErrorCode::kConfig, "data: at least 2 speakers are required");
  if (!(duration_s >= 0.5)) fail(ErrorCode::kConfig, "data: duration must be at least 0.5 s");
  if (!(overlap >= 0.0 && overlap <= 1.0)) fail(ErrorCode::kConfig, "data: overlap must lie in [0, 1]");
  if (!(snr_low_db <= snr_high_db)) fail(ErrorCode::kConfig, "data: snr_low_db exceeds snr_high_db");
}

Example make_example(const DataConfig &config, std::uint64_t seed, const std::string &id) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> snr(config.snr_low_db, config.snr_high_db);
  std::vector<Waveform> clips;
  std::vector<std::uint64_t> identity;
  for (std::size_t k = 0; k < config.speakers; ++k) {
    clips.push_back(synth_speech_like(derive_seed(seed, 2 * k), config.duration_s));
    identity.push_back(derive_seed(seed, 2 * k + 1));
  }
  std::vector<double> snrs(config.speakers - 1);
  for (auto &v : snrs) v = snr(rng);

  Example ex;
  ex.id = id;
  ex.seed = seed;
  if (config.sparse) {
    ScheduleOptions options;
    options.min_turn = config.min_turn;
    const ActivitySchedule schedule = make_sparse_schedule(
        clips[0].size(), config.speakers, config.overlap, derive_seed(seed, 1000), options);
    ex.sample = mix_sparse(clips, schedule, snrs);
  } else {
    ex.sample = mix_dense(clips, snrs);
  }
  for (std::size_t k = 0; k < config.speakers; ++k) {
    ex.faces.push_back(synth_visual(ex.sample.schedule.tracks[k], ex.sample.sources[k],
                                    identity[k], config.visual));
  }
  return ex;
}

std::vector<Example> make_dataset(const DataConfig &config, std::size_t count,
                                  std::uint64_t seed, std::size_t offset) {
  std::vector<Example> out(count);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t index = offset + i;
    out[i] = make_example(config, derive_seed(seed, index), "s" + std::to_string(index));
  }
  return out;
}

}  // namespace avse
