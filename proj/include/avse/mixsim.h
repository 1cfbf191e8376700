// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Multi-talker mixture simulation. Speaker 0 is the target; interferer SNRs
// are given relative to it.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace avse {

inline constexpr std::size_t kSampleRate = 16000;

using Waveform = std::vector<double>;

struct Interval {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive

  std::size_t length() const { return end - start; }
  bool operator==(const Interval &) const = default;
};

struct ActivitySchedule {
  std::vector<std::vector<Interval>> tracks;  // one sorted list per speaker
  std::size_t total_len = 0;

  std::size_t speakers() const { return tracks.size(); }
  std::vector<std::uint8_t> active_count() const;
  // Fraction of samples where at least two speakers are active.
  double overlap_fraction() const;
  bool operator==(const ActivitySchedule &) const = default;
};

struct MixtureSample {
  Waveform mixture;
  std::vector<Waveform> sources;
  ActivitySchedule schedule;
  std::vector<double> snrs_db;  // per interferer
  std::size_t sample_rate = kSampleRate;
};

double energy(std::span<const double> x);

// Gain g for the interferer such that 10 log10(E_t / (g^2 E_i)) = snr_db.
double snr_scale(std::span<const double> target, std::span<const double> interferer,
                 double snr_db);

// Truncate-and-sum mixing; all speakers are active throughout.
MixtureSample mix_dense(const std::vector<Waveform> &clips,
                        const std::vector<double> &snrs_db);

struct ScheduleOptions {
  // Shortest turn, in samples.
  std::size_t min_turn = 1600;
};

// Alternating turns over a random speaker order. Overlap is created only at
// turn boundaries and never involves more than two speakers, so the overlap
// fraction is round(overlap_fraction * total_len) / total_len exactly.
ActivitySchedule make_sparse_schedule(std::size_t total_len, std::size_t n_speakers,
                                      double overlap_fraction, std::uint64_t seed,
                                      const ScheduleOptions &options = {});

// Places consecutive material from each speaker's clip into that speaker's
// intervals. Interferer gains use mean power over each speaker's own active
// samples.
MixtureSample mix_sparse(const std::vector<Waveform> &material,
                         const ActivitySchedule &schedule,
                         const std::vector<double> &snrs_db);

// Seeded pseudo-speech: a harmonic series over a drifting fundamental
// (80-300 Hz) shaped by a 2-8 Hz syllabic envelope, peak-normalized to 0.5.
Waveform synth_speech_like(std::uint64_t seed, double duration_s,
                           std::size_t sample_rate = kSampleRate);

// Independent stream seed for item `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace avse
