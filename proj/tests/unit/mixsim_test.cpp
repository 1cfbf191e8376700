// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "avse/error.h"
#include "avse/mixsim.h"

namespace avse {
namespace {

double active_power(const Waveform &w, const std::vector<Interval> &track) {
  double e = 0.0;
  std::size_t n = 0;
  for (const auto &iv : track) {
    for (std::size_t t = iv.start; t < iv.end; ++t) e += w[t] * w[t];
    n += iv.length();
  }
  return e / static_cast<double>(n);
}

void expect_sum_identity(const MixtureSample &m, double tol) {
  for (std::size_t t = 0; t < m.mixture.size(); ++t) {
    double s = 0.0;
    for (const auto &src : m.sources) s += src[t];
    ASSERT_NEAR(m.mixture[t], s, tol) << "t=" << t;
  }
}

void expect_valid_schedule(const ActivitySchedule &s) {
  for (const auto &track : s.tracks) {
    ASSERT_FALSE(track.empty());
    for (std::size_t i = 0; i < track.size(); ++i) {
      ASSERT_LT(track[i].start, track[i].end);
      ASSERT_LE(track[i].end, s.total_len);
      if (i > 0) ASSERT_LT(track[i - 1].end, track[i].start);
    }
  }
}

TEST(SnrScale, HandValues) {
  const Waveform a{1.0, -1.0, 1.0, -1.0}, b{-1.0, 1.0, 1.0, -1.0};
  EXPECT_NEAR(snr_scale(a, b, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(snr_scale(a, b, 20.0), 0.1, 1e-15);
  EXPECT_NEAR(snr_scale(a, b, -10.0), std::sqrt(10.0), 1e-12);
}

TEST(SnrScale, ZeroEnergyIsDegenerate) {
  try {
    snr_scale(Waveform{1.0, 0.0}, Waveform{0.0, 0.0}, 0.0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateSource);
  }
}

TEST(MixDense, TruncatesToShortestClip) {
  const auto m = mix_dense({synth_speech_like(1, 2.0), synth_speech_like(2, 3.0)}, {5.0});
  EXPECT_EQ(m.mixture.size(), 32000u);
  for (const auto &s : m.sources) EXPECT_EQ(s.size(), 32000u);
  EXPECT_EQ(m.schedule.tracks[1], (std::vector<Interval>{{0, 32000}}));
}

TEST(MixDense, MeasuredSnrMatchesRequest) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> snr(-10.0, 10.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::vector<double> snrs{snr(rng), snr(rng)};
    const auto m = mix_dense({synth_speech_like(seed * 3, 1.0), synth_speech_like(seed * 3 + 1, 1.0),
                              synth_speech_like(seed * 3 + 2, 1.0)},
                             snrs);
    ASSERT_EQ(m.sources.size(), 3u);
    for (std::size_t i = 1; i < 3; ++i) {
      const double measured = 10.0 * std::log10(energy(m.sources[0]) / energy(m.sources[i]));
      EXPECT_NEAR(measured, snrs[i - 1], 1e-6);
    }
    expect_sum_identity(m, 1e-12);
  }
}

TEST(MixDense, NeedsTwoClips) {
  try {
    mix_dense({synth_speech_like(1, 1.0)}, {});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kContract);
  }
}

TEST(SparseSchedule, ZeroOverlapHasNoSimultaneousActivity) {
  for (std::size_t speakers : {2u, 3u}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = make_sparse_schedule(32000, speakers, 0.0, seed);
      expect_valid_schedule(s);
      const auto count = s.active_count();
      EXPECT_LE(*std::max_element(count.begin(), count.end()), 1);
      EXPECT_EQ(s.overlap_fraction(), 0.0);
    }
  }
}

TEST(SparseSchedule, OverlapFractionWithinTolerance) {
  for (double f : {0.1, 0.3, 0.5}) {
    for (std::size_t speakers : {2u, 3u, 4u}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = make_sparse_schedule(64000, speakers, f, seed);
        expect_valid_schedule(s);
        EXPECT_NEAR(s.overlap_fraction(), f, 0.05) << f << " " << speakers << " " << seed;
      }
    }
  }
}

TEST(SparseSchedule, DeterministicPerSeed) {
  EXPECT_EQ(make_sparse_schedule(32000, 3, 0.3, 9), make_sparse_schedule(32000, 3, 0.3, 9));
  EXPECT_NE(make_sparse_schedule(32000, 3, 0.3, 9), make_sparse_schedule(32000, 3, 0.3, 10));
}

TEST(SparseSchedule, InfeasibleRequestIsSchedulingError) {
  for (auto call : {+[] { make_sparse_schedule(1000, 2, 0.3, 1); },
                    +[] { make_sparse_schedule(32000, 2, 1.5, 1); },
                    +[] { make_sparse_schedule(32000, 1, 0.3, 1); }}) {
    try {
      call();
      FAIL();
    } catch (const Error &e) {
      EXPECT_EQ(e.code(), ErrorCode::kScheduling);
    }
  }
}

TEST(MixSparse, DisjointHalvesReproduceSources) {
  ActivitySchedule s;
  s.total_len = 16000;
  s.tracks = {{{0, 8000}}, {{8000, 16000}}};
  const auto m = mix_sparse({synth_speech_like(1, 1.0), synth_speech_like(2, 1.0)}, s, {0.0});
  for (std::size_t t = 0; t < 8000; ++t) ASSERT_EQ(m.mixture[t], m.sources[0][t]);
  for (std::size_t t = 8000; t < 16000; ++t) ASSERT_EQ(m.mixture[t], m.sources[1][t]);
}

TEST(MixSparse, ActiveRegionSnrAndSumIdentity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> snr(-10.0, 10.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 2 + seed % 2;
    const auto sched = make_sparse_schedule(32000, n, 0.3, seed);
    std::vector<Waveform> material;
    std::vector<double> snrs;
    for (std::size_t i = 0; i < n; ++i) material.push_back(synth_speech_like(seed * 10 + i, 2.0));
    for (std::size_t i = 1; i < n; ++i) snrs.push_back(snr(rng));
    const auto m = mix_sparse(material, sched, snrs);
    for (std::size_t i = 1; i < n; ++i) {
      const double measured = 10.0 * std::log10(active_power(m.sources[0], sched.tracks[0]) /
                                                 active_power(m.sources[i], sched.tracks[i]));
      EXPECT_NEAR(measured, snrs[i - 1], 1e-6);
    }
    expect_sum_identity(m, 1e-12);
    // Sources are silent outside their intervals.
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<bool> on(32000, false);
      for (const auto &iv : sched.tracks[i]) std::fill(on.begin() + iv.start, on.begin() + iv.end, true);
      for (std::size_t t = 0; t < 32000; ++t) {
        if (!on[t]) ASSERT_EQ(m.sources[i][t], 0.0);
      }
    }
  }
}

TEST(MixSparse, InsufficientMaterialIsSchedulingError) {
  ActivitySchedule s;
  s.total_len = 16000;
  s.tracks = {{{0, 12000}}, {{8000, 16000}}};
  try {
    mix_sparse({synth_speech_like(1, 0.5), synth_speech_like(2, 1.0)}, s, {0.0});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kScheduling);
  }
}

TEST(SynthSpeech, DeterministicAndPeakNormalized) {
  const auto a = synth_speech_like(7, 1.0), b = synth_speech_like(7, 1.0);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 16000u);
  double peak = 0.0;
  for (double v : a) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 0.5, 1e-6);
}

TEST(SynthSpeech, DistinctSeedsAreWeaklyCorrelated) {
  const auto a = synth_speech_like(1, 1.0), b = synth_speech_like(2, 1.0);
  double ea = 0.0, eb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ea += a[i] * a[i];
    eb += b[i] * b[i];
  }
  // Maximum over lags of the normalized cross-correlation.
  const long n = static_cast<long>(a.size());
  double best = 0.0;
  for (long lag = -n + 1; lag < n; lag += 1) {
    double s = 0.0;
    for (long i = std::max(0L, -lag); i < std::min(n, n - lag); ++i) s += a[i] * b[i + lag];
    best = std::max(best, std::abs(s) / std::sqrt(ea * eb));
  }
  EXPECT_LT(best, 0.3);
}

TEST(SynthSpeech, ShortDurationIsRejected) {
  EXPECT_THROW(synth_speech_like(1, 0.4), Error);
}

TEST(DeriveSeed, DistinctIndicesGiveDistinctSeeds) {
  std::vector<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.push_back(derive_seed(42, i));
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(std::unique(seen.begin(), seen.end()), seen.end());
}

}  // namespace
}  // namespace avse
