// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/mixsim.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "avse/error.h"

namespace avse {

std::vector<std::uint8_t> ActivitySchedule::active_count() const {
  std::vector<std::uint8_t> count(total_len, 0);
  for (const auto &track : tracks) {
    for (const auto &iv : track) {
      for (std::size_t i = iv.start; i < iv.end; ++i) ++count[i];
    }
  }
  return count;
}

double ActivitySchedule::overlap_fraction() const {
  if (total_len == 0) return 0.0;
  const auto count = active_count();
  const auto overlapped = std::count_if(count.begin(), count.end(),
                                        [](std::uint8_t c) { return c >= 2; });
  return static_cast<double>(overlapped) / static_cast<double>(total_len);
}

double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

namespace {

double gain_for(double target_power, double interferer_power, double snr_db) {
  return std::sqrt(target_power / interferer_power) * std::pow(10.0, -snr_db / 20.0);
}

void check_snr_count(std::size_t speakers, const std::vector<double> &snrs_db) {
  if (snrs_db.size() != speakers - 1) {
    fail(ErrorCode::kContract, std::to_string(speakers) + " speakers need " +
                                   std::to_string(speakers - 1) + " SNR values, got " +
                                   std::to_string(snrs_db.size()));
  }
}

}  // namespace

double snr_scale(std::span<const double> target, std::span<const double> interferer,
                 double snr_db) {
  const double et = energy(target), ei = energy(interferer);
  if (et == 0.0 || ei == 0.0) {
    fail(ErrorCode::kDegenerateSource, "snr_scale: zero-energy input");
  }
  return gain_for(et, ei, snr_db);
}

MixtureSample mix_dense(const std::vector<Waveform> &clips,
                        const std::vector<double> &snrs_db) {
  if (clips.size() < 2) {
    fail(ErrorCode::kContract, "mix_dense: at least 2 clips are required");
  }
  check_snr_count(clips.size(), snrs_db);
  std::size_t len = clips[0].size();
  for (const auto &c : clips) len = std::min(len, c.size());
  if (len == 0) fail(ErrorCode::kDegenerateSource, "mix_dense: empty clip");

  MixtureSample out;
  out.schedule.total_len = len;
  out.snrs_db = snrs_db;
  const std::span<const double> target(clips[0].data(), len);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const std::span<const double> clip(clips[i].data(), len);
    const double g = i == 0 ? 1.0 : snr_scale(target, clip, snrs_db[i - 1]);
    if (i == 0 && energy(clip) == 0.0) {
      fail(ErrorCode::kDegenerateSource, "mix_dense: target has zero energy");
    }
    Waveform src(len);
    for (std::size_t t = 0; t < len; ++t) src[t] = g * clip[t];
    out.sources.push_back(std::move(src));
    out.schedule.tracks.push_back({{0, len}});
  }
  out.mixture.assign(len, 0.0);
  for (const auto &src : out.sources) {
    for (std::size_t t = 0; t < len; ++t) out.mixture[t] += src[t];
  }
  return out;
}

ActivitySchedule make_sparse_schedule(std::size_t total_len, std::size_t n_speakers,
                                      double overlap_fraction, std::uint64_t seed,
                                      const ScheduleOptions &options) {
  if (!(overlap_fraction >= 0.0 && overlap_fraction <= 1.0)) {
    fail(ErrorCode::kScheduling, "overlap fraction must lie in [0, 1]");
  }
  if (n_speakers < 2) fail(ErrorCode::kScheduling, "at least 2 speakers are required");
  const std::size_t min_turn = std::max<std::size_t>(options.min_turn, 1);
  if (total_len < n_speakers * min_turn) {
    fail(ErrorCode::kScheduling, std::to_string(total_len) + " samples cannot hold " +
                                     std::to_string(n_speakers) + " turns of " +
                                     std::to_string(min_turn) + " samples");
  }
  std::mt19937_64 rng(seed);

  const std::size_t max_turns = std::min(2 * n_speakers, total_len / min_turn);
  const std::size_t turns =
      std::uniform_int_distribution<std::size_t>(n_speakers, max_turns)(rng);

  // Turn lengths: min_turn each plus a random share of the slack.
  std::vector<double> weights(turns);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto &w : weights) w = 0.25 + unit(rng);
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  const std::size_t slack = total_len - turns * min_turn;
  std::vector<std::size_t> len(turns, min_turn);
  std::size_t given = 0;
  for (std::size_t j = 0; j < turns; ++j) {
    const auto extra = static_cast<std::size_t>(std::floor(slack * weights[j] / wsum));
    len[j] += extra;
    given += extra;
  }
  len[turns - 1] += slack - given;
  std::vector<std::size_t> start(turns, 0);
  for (std::size_t j = 1; j < turns; ++j) start[j] = start[j - 1] + len[j - 1];

  std::vector<std::size_t> order(n_speakers);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  // Overlapped samples, spread over turns in proportion to their length.
  const auto total_overlap =
      static_cast<std::size_t>(std::llround(overlap_fraction * static_cast<double>(total_len)));
  std::vector<std::size_t> share(turns);
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < turns; ++j) {
    share[j] = total_overlap * len[j] / total_len;
    assigned += share[j];
  }
  for (std::size_t j = 0; assigned < total_overlap; j = (j + 1) % turns) {
    if (share[j] < len[j]) {
      ++share[j];
      ++assigned;
    }
  }
  // Within turn j, the previous speaker keeps talking for head[j] samples and
  // the next speaker starts tail[j] samples early.
  std::vector<std::size_t> head(turns, 0), tail(turns, 0);
  for (std::size_t j = 0; j < turns; ++j) {
    if (j == 0) {
      tail[j] = share[j];
    } else if (j == turns - 1) {
      head[j] = share[j];
    } else {
      head[j] = static_cast<std::size_t>(std::llround(unit(rng) * share[j]));
      tail[j] = share[j] - head[j];
    }
  }

  ActivitySchedule schedule;
  schedule.total_len = total_len;
  schedule.tracks.resize(n_speakers);
  for (std::size_t j = 0; j < turns; ++j) {
    Interval iv{start[j], start[j] + len[j]};
    if (j > 0) iv.start -= tail[j - 1];
    if (j + 1 < turns) iv.end += head[j + 1];
    schedule.tracks[order[j % n_speakers]].push_back(iv);
  }
  for (auto &track : schedule.tracks) {
    std::sort(track.begin(), track.end(),
              [](const Interval &a, const Interval &b) { return a.start < b.start; });
    std::vector<Interval> merged;
    for (const auto &iv : track) {
      if (!merged.empty() && iv.start <= merged.back().end) {
        merged.back().end = std::max(merged.back().end, iv.end);
      } else {
        merged.push_back(iv);
      }
    }
    track = std::move(merged);
  }
  return schedule;
}

MixtureSample mix_sparse(const std::vector<Waveform> &material,
                         const ActivitySchedule &schedule,
                         const std::vector<double> &snrs_db) {
  const std::size_t n = schedule.speakers();
  if (n < 2 || material.size() != n) {
    fail(ErrorCode::kContract, "mix_sparse: need one material clip per scheduled speaker");
  }
  check_snr_count(n, snrs_db);
  const std::size_t len = schedule.total_len;

  MixtureSample out;
  out.schedule = schedule;
  out.snrs_db = snrs_db;
  std::vector<double> power(n);
  for (std::size_t i = 0; i < n; ++i) {
    Waveform placed(len, 0.0);
    std::size_t pos = 0, active = 0;
    for (const auto &iv : schedule.tracks[i]) {
      if (iv.end > len || iv.start >= iv.end) {
        fail(ErrorCode::kScheduling, "mix_sparse: interval outside the schedule");
      }
      if (pos + iv.length() > material[i].size()) {
        fail(ErrorCode::kScheduling, "mix_sparse: speaker " + std::to_string(i) +
                                         " needs more than " +
                                         std::to_string(material[i].size()) +
                                         " samples of material");
      }
      std::copy_n(material[i].begin() + static_cast<std::ptrdiff_t>(pos), iv.length(),
                  placed.begin() + static_cast<std::ptrdiff_t>(iv.start));
      pos += iv.length();
      active += iv.length();
    }
    const double e = energy(placed);
    if (active == 0 || e == 0.0) {
      fail(ErrorCode::kDegenerateSource, "mix_sparse: speaker " + std::to_string(i) +
                                             " has no active energy");
    }
    power[i] = e / static_cast<double>(active);
    out.sources.push_back(std::move(placed));
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double g = gain_for(power[0], power[i], snrs_db[i - 1]);
    for (double &v : out.sources[i]) v *= g;
  }
  out.mixture.assign(len, 0.0);
  for (const auto &src : out.sources) {
    for (std::size_t t = 0; t < len; ++t) out.mixture[t] += src[t];
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the combined key.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Waveform synth_speech_like(std::uint64_t seed, double duration_s, std::size_t sample_rate) {
  if (!(duration_s >= 0.5)) {
    fail(ErrorCode::kContract, "synth_speech_like: duration must be at least 0.5 s");
  }
  const auto len = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  const double fs = static_cast<double>(sample_rate);
  const double two_pi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  // Voice: base pitch, vibrato-like drift and two formant regions.
  const double f0_base = uniform(90.0, 250.0);
  const double drift_rate = uniform(0.3, 1.2);
  const double drift_depth = uniform(0.05, 0.2);
  const double drift_phase = uniform(0.0, two_pi);
  const double formant1 = uniform(300.0, 900.0);
  const double formant2 = uniform(1000.0, 2500.0);

  // Syllables: consecutive bumps at 2-8 Hz with random loudness and a
  // per-syllable formant shift.
  std::vector<double> envelope(len, 0.0);
  std::vector<double> shift(len, 1.0);
  for (std::size_t t = 0; t < len;) {
    const auto dur = static_cast<std::size_t>(fs / uniform(2.0, 8.0));
    const double amp = uniform(0.3, 1.0);
    const double f_shift = uniform(0.8, 1.25);
    const std::size_t end = std::min(len, t + dur);
    for (std::size_t i = t; i < end; ++i) {
      const double phase = static_cast<double>(i - t) / static_cast<double>(dur);
      envelope[i] = amp * std::pow(std::sin(std::numbers::pi * phase), 2.0);
      shift[i] = f_shift;
    }
    t = end;
  }

  constexpr int kHarmonics = 24;
  std::vector<double> phase(kHarmonics);
  for (auto &p : phase) p = uniform(0.0, two_pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  Waveform out(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    const double time = static_cast<double>(i) / fs;
    const double f0 = std::clamp(
        f0_base * (1.0 + drift_depth * std::sin(two_pi * drift_rate * time + drift_phase)),
        80.0, 300.0);
    double v = 0.0;
    for (int k = 1; k <= kHarmonics; ++k) {
      const double f = k * f0;
      phase[k - 1] = std::fmod(phase[k - 1] + two_pi * f / fs, two_pi);
      if (f >= 0.45 * fs) continue;
      const double d1 = (f - formant1 * shift[i]) / 200.0;
      const double d2 = (f - formant2 * shift[i]) / 300.0;
      const double amp = (std::exp(-d1 * d1) + 0.6 * std::exp(-d2 * d2) + 0.05) / k;
      v += amp * std::sin(phase[k - 1]);
    }
    // Breath noise keeps the signal from being perfectly periodic.
    v += 0.02 * noise(rng);
    out[i] = (0.02 + envelope[i]) * v;
  }
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  for (double &v : out) v *= 0.5 / peak;
  return out;
}

}  // namespace avse
